"""Live backend: the three oracle roles served by local vision-language
models. Heavy imports happen lazily at startup so stub mode stays
dependency-free.

Model config (JSON file passed via --models):

    {
      "parse_model": "google/flan-t5-base",
      "itm_model": "openai/clip-vit-base-patch32",
      "vqa_model": "Salesforce/blip-vqa-base",
      "device": "cpu"
    }

The question-parsing instruction below is a replaceable default template,
editable here or overridden per request deployment without code changes.
"""

from __future__ import annotations

import base64
import io
import json
import re

PARSE_INSTRUCTION = (
    "Read the question about a scene. Name the single object category the "
    "question is about (a lowercase singular noun), and rewrite the question "
    "as a short declarative noun phrase describing that object for "
    "image-text matching. Answer in JSON with keys \"category\" and "
    "\"declarative\".\nQuestion: {question}\nJSON:"
)

DEFAULT_MODELS = {
    "parse_model": "google/flan-t5-base",
    "itm_model": "openai/clip-vit-base-patch32",
    "vqa_model": "Salesforce/blip-vqa-base",
    "device": "cpu",
}


class LiveStartupError(RuntimeError):
    pass


class LiveBackend:
    def __init__(self, models: dict | None = None):
        cfg = dict(DEFAULT_MODELS)
        cfg.update(models or {})
        try:
            import torch
            from PIL import Image
            from transformers import (
                AutoModelForSeq2SeqLM,
                AutoProcessor,
                AutoTokenizer,
                BlipForQuestionAnswering,
                CLIPModel,
                CLIPProcessor,
            )
        except ImportError as e:
            raise LiveStartupError(
                f"live mode needs the [live] extras installed: {e}") from e
        self._torch = torch
        self._Image = Image
        self.device = cfg["device"]
        self._parse_tok = AutoTokenizer.from_pretrained(cfg["parse_model"])
        self._parse_model = AutoModelForSeq2SeqLM.from_pretrained(
            cfg["parse_model"]).to(self.device)
        self._clip_proc = CLIPProcessor.from_pretrained(cfg["itm_model"])
        self._clip = CLIPModel.from_pretrained(cfg["itm_model"]).to(self.device)
        self._vqa_proc = AutoProcessor.from_pretrained(cfg["vqa_model"])
        self._vqa = BlipForQuestionAnswering.from_pretrained(
            cfg["vqa_model"]).to(self.device)

    def _decode_image(self, image_b64: str):
        return self._Image.open(io.BytesIO(base64.b64decode(image_b64))).convert("RGB")

    def handle(self, endpoint: str, body: dict) -> dict:
        if endpoint == "/v1/parse_question":
            return self._parse_question(body["question"])
        if "image_b64" not in body:
            raise ValueError("live mode scores images; send image_b64, "
                             "not a structured snapshot")
        image = self._decode_image(body["image_b64"])
        if endpoint == "/v1/itm":
            return {"score": self._itm(image, body["declarative"])}
        if endpoint == "/v1/vqa":
            return {"answer": self._vqa_answer(image, body["question"])}
        raise ValueError(f"unknown endpoint {endpoint}")

    def _parse_question(self, question: str) -> dict:
        prompt = PARSE_INSTRUCTION.format(question=question)
        inputs = self._parse_tok(prompt, return_tensors="pt").to(self.device)
        out = self._parse_model.generate(**inputs, max_new_tokens=64)
        text = self._parse_tok.decode(out[0], skip_special_tokens=True)
        try:
            data = json.loads(text)
            category = str(data["category"]).strip().lower()
            declarative = str(data["declarative"]).strip().lower()
        except (json.JSONDecodeError, KeyError, TypeError):
            # fall back to the last noun-ish token when the model free-forms
            words = re.findall(r"[a-z]+", text.lower())
            category = words[-1] if words else "object"
            declarative = f"the {category}"
        if not category or not declarative:
            raise ValueError(f"parse model returned nothing usable: {text!r}")
        return {"category": category, "declarative": declarative}

    def _itm(self, image, declarative: str) -> float:
        inputs = self._clip_proc(text=[declarative], images=image,
                                 return_tensors="pt", padding=True).to(self.device)
        with self._torch.no_grad():
            out = self._clip(**inputs)
        # cosine similarity in [-1, 1] mapped onto the protocol's [0, 1]
        sim = float(out.logits_per_image[0, 0] / self._clip.logit_scale.exp())
        return max(0.0, min(1.0, (sim + 1.0) / 2.0))

    def _vqa_answer(self, image, question: str) -> str:
        inputs = self._vqa_proc(image, question, return_tensors="pt").to(self.device)
        with self._torch.no_grad():
            out = self._vqa.generate(**inputs, max_new_tokens=16)
        return self._vqa_proc.decode(out[0], skip_special_tokens=True).strip().lower()
