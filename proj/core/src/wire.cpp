// SPDX-License-Identifier: Apache-2.0
#include "muri/wire.hpp"

#include <nlohmann/json.hpp>

#include "muri/text.hpp"

namespace muri::wire {

namespace {

using ojson = nlohmann::ordered_json;

std::string dump(const ojson& j) { return j.dump(-1, ' ', false, ojson::error_handler_t::strict); }

Reply error_reply(int status, std::string_view code, std::string_view message) {
  return {status, error_body(code, message)};
}

Reply failure_reply(const Failure& f) {
  if (f.reason == "too_long") return error_reply(413, "too_long", f.detail);
  if (f.reason == "bad_request") return error_reply(400, "bad_request", f.detail);
  return error_reply(503, "unavailable", f.detail);
}

std::optional<ojson> parse_body(std::string_view body) {
  if (!text::is_valid_utf8(body)) return std::nullopt;
  try {
    ojson j = ojson::parse(body);
    if (!j.is_object()) return std::nullopt;
    return j;
  } catch (const ojson::parse_error&) {
    return std::nullopt;
  }
}

const std::string* get_string(const ojson& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) return nullptr;
  return it->get_ptr<const std::string*>();
}

}  // namespace

std::string_view endpoint_path(ModelRole role) {
  switch (role) {
    case ModelRole::translate: return "/v1/translate";
    case ModelRole::generate: return "/v1/generate";
    case ModelRole::lid: return "/v1/lid";
    case ModelRole::screen: return "/v1/screen";
  }
  return "";
}

std::string translate_request(std::string_view t, const LanguageTag& src, const LanguageTag& tgt,
                              double top_p) {
  ojson j;
  j["text"] = t;
  j["src"] = src.str();
  j["tgt"] = tgt.str();
  j["top_p"] = top_p;
  return dump(j);
}

std::string generate_request(std::string_view prompt, const DecodeOptions& decode) {
  ojson j;
  j["prompt"] = prompt;
  j["mode"] = decode.mode == DecodeMode::greedy ? "greedy" : "top_p";
  j["top_p"] = decode.top_p;
  return dump(j);
}

std::string lid_request(std::string_view t) {
  ojson j;
  j["text"] = t;
  return dump(j);
}

std::string screen_request(std::string_view t) { return lid_request(t); }

Result<Completion> parse_completion(std::string_view body) {
  auto j = parse_body(body);
  if (!j) return Failure{"bad_response", "body is not a JSON object"};
  const std::string* t = get_string(*j, "text");
  if (!t) return Failure{"bad_response", "missing 'text'"};
  const std::string* model = get_string(*j, "model");
  return Completion{*t, model ? *model : std::string()};
}

Result<LidResult> parse_lid(std::string_view body) {
  auto j = parse_body(body);
  if (!j) return Failure{"bad_response", "body is not a JSON object"};
  const std::string* lang = get_string(*j, "lang");
  auto conf = j->find("confidence");
  if (!lang || conf == j->end() || !conf->is_number())
    return Failure{"bad_response", "missing 'lang' or 'confidence'"};
  const double c = conf->get<double>();
  if (c < 0.0 || c > 1.0) return Failure{"bad_response", "confidence outside [0,1]"};
  const std::string* model = get_string(*j, "model");
  return LidResult{LanguageTag::unchecked(*lang), c, model ? *model : std::string()};
}

Result<ScreenScore> parse_screen(std::string_view body) {
  auto j = parse_body(body);
  if (!j) return Failure{"bad_response", "body is not a JSON object"};
  auto score = j->find("score");
  if (score == j->end() || !score->is_number()) return Failure{"bad_response", "missing 'score'"};
  const double s = score->get<double>();
  if (s < 0.0 || s > 1.0) return Failure{"bad_response", "score outside [0,1]"};
  const std::string* model = get_string(*j, "model");
  return ScreenScore{s, model ? *model : std::string()};
}

std::string error_body(std::string_view code, std::string_view message) {
  ojson j;
  j["code"] = code;
  j["message"] = message;
  return dump(j);
}

std::string error_code(std::string_view body) {
  auto j = parse_body(body);
  if (!j) return "unavailable";
  const std::string* code = get_string(*j, "code");
  return code ? *code : std::string("unavailable");
}

Reply handle(InferenceBackend& backend, ModelRole role, std::string_view body,
             double screen_threshold) {
  auto req = parse_body(body);
  if (!req) return error_reply(400, "bad_request", "body must be a JSON object");

  switch (role) {
    case ModelRole::translate: {
      const std::string* t = get_string(*req, "text");
      const std::string* src = get_string(*req, "src");
      const std::string* tgt = get_string(*req, "tgt");
      if (!t || !src || !tgt) return error_reply(400, "bad_request", "need text, src, tgt");
      auto s = LanguageTag::parse(*src);
      auto g = LanguageTag::parse(*tgt);
      if (!s || !g) return error_reply(400, "bad_request", "malformed language tag");
      if (text::trim(*t).empty() || *s == *g)
        return error_reply(400, "bad_request", "text must be nonempty and src != tgt");
      const double top_p = req->value("top_p", 1.0);
      auto r = backend.translate(*t, *s, *g, top_p);
      if (!r) return failure_reply(r.failure());
      ojson out;
      out["text"] = r->text;
      out["model"] = r->model_id;
      return {200, dump(out)};
    }
    case ModelRole::generate: {
      const std::string* prompt = get_string(*req, "prompt");
      if (!prompt || text::trim(*prompt).empty())
        return error_reply(400, "bad_request", "need a nonempty prompt");
      DecodeOptions decode;
      const std::string mode = req->value("mode", std::string("greedy"));
      if (mode == "top_p")
        decode.mode = DecodeMode::top_p;
      else if (mode != "greedy")
        return error_reply(400, "bad_request", "mode must be greedy or top_p");
      decode.top_p = req->value("top_p", 1.0);
      auto r = backend.generate(*prompt, decode);
      if (!r) return failure_reply(r.failure());
      ojson out;
      out["text"] = r->text;
      out["model"] = r->model_id;
      return {200, dump(out)};
    }
    case ModelRole::lid: {
      const std::string* t = get_string(*req, "text");
      if (!t || text::trim(*t).empty()) return error_reply(400, "bad_request", "need text");
      auto r = backend.identify_language(*t);
      if (!r) return failure_reply(r.failure());
      ojson out;
      out["lang"] = r->lang.str();
      out["confidence"] = r->confidence;
      out["model"] = r->model_id;
      return {200, dump(out)};
    }
    case ModelRole::screen: {
      const std::string* t = get_string(*req, "text");
      if (!t || text::trim(*t).empty()) return error_reply(400, "bad_request", "need text");
      auto r = backend.screen(*t);
      if (!r) return failure_reply(r.failure());
      const ScreenVerdict v = make_verdict(r->score, screen_threshold, r->model_id);
      ojson out;
      out["label"] = v.flagged() ? "flagged" : "acceptable";
      out["score"] = v.score;
      out["model"] = v.model_id;
      return {200, dump(out)};
    }
  }
  return error_reply(500, "internal", "unknown role");
}

}  // namespace muri::wire
