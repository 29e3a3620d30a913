// SPDX-License-Identifier: Apache-2.0
#include "muri/jsonl.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "muri/text.hpp"

namespace muri {

namespace {

using ojson = nlohmann::ordered_json;

ojson opt_string(const std::optional<std::string>& s) {
  return s ? ojson(*s) : ojson(nullptr);
}

ojson trace_to_json(const StageTrace& t) {
  ojson stages = ojson::array();
  for (const auto& e : t.stages) {
    ojson j;
    j["name"] = e.name;
    j["status"] = e.status == StageStatus::pass ? "pass" : "drop";
    if (e.reason) j["reason"] = *e.reason;
    if (e.model_id) j["model_id"] = *e.model_id;
    stages.push_back(std::move(j));
  }
  ojson j;
  j["doc_en"] = opt_string(t.doc_en);
  j["inst_en"] = opt_string(t.inst_en);
  j["stages"] = std::move(stages);
  j["rng_seed"] = t.rng_seed;
  j["truncated"] = t.truncated;
  return j;
}

[[noreturn]] void fail(std::size_t line, const std::string& what) { throw JsonlError(line, what); }

const ojson& require(const ojson& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(line, std::string("missing field '") + key + "'");
  return *it;
}

std::string require_string(const ojson& obj, const char* key, std::size_t line) {
  const ojson& v = require(obj, key, line);
  if (!v.is_string()) fail(line, std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

std::optional<std::string> optional_string(const ojson& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) fail(line, std::string("field '") + key + "' must be a string or null");
  return it->get<std::string>();
}

StageTrace trace_from_json(const ojson& j, std::size_t line) {
  if (!j.is_object()) fail(line, "trace must be an object");
  StageTrace t;
  t.doc_en = optional_string(j, "doc_en", line);
  t.inst_en = optional_string(j, "inst_en", line);
  if (auto it = j.find("stages"); it != j.end()) {
    if (!it->is_array()) fail(line, "trace.stages must be an array");
    for (const auto& s : *it) {
      if (!s.is_object()) fail(line, "trace.stages entries must be objects");
      StageEntry e;
      e.name = require_string(s, "name", line);
      const std::string status = require_string(s, "status", line);
      if (status == "pass")
        e.status = StageStatus::pass;
      else if (status == "drop")
        e.status = StageStatus::drop;
      else
        fail(line, "unknown stage status '" + status + "'");
      e.reason = optional_string(s, "reason", line);
      e.model_id = optional_string(s, "model_id", line);
      t.stages.push_back(std::move(e));
    }
  }
  if (auto it = j.find("rng_seed"); it != j.end()) {
    if (!it->is_number_unsigned()) fail(line, "trace.rng_seed must be an unsigned integer");
    t.rng_seed = it->get<std::uint64_t>();
  }
  if (auto it = j.find("truncated"); it != j.end()) {
    if (!it->is_boolean()) fail(line, "trace.truncated must be a boolean");
    t.truncated = it->get<bool>();
  }
  return t;
}

ojson parse_object(std::string_view line, std::size_t line_no) {
  if (!text::is_valid_utf8(line)) throw Utf8Error(line_no, "invalid UTF-8");
  ojson j;
  try {
    j = ojson::parse(line);
  } catch (const ojson::parse_error& e) {
    fail(line_no, std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) fail(line_no, "expected a JSON object");
  return j;
}

template <typename Fn>
void for_each_line_in(std::string_view bytes, Fn&& fn) {
  std::size_t start = 0, line_no = 0;
  while (start < bytes.size()) {
    ++line_no;
    std::size_t nl = bytes.find('\n', start);
    std::string_view line =
        bytes.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    fn(line, line_no);
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
}

}  // namespace

std::string serialize_record(const InstructionRecord& rec, SerializeOptions opts) {
  ojson j;
  j["id"] = rec.id;
  j["lang"] = rec.lang.str();
  j["instruction"] = rec.instruction;
  j["output"] = rec.output;
  j["source"] = std::string(to_string(rec.source));
  if (!opts.strip_trace) j["trace"] = trace_to_json(rec.trace);
  j["split"] = std::string(to_string(rec.split));
  // Strict dump: invalid UTF-8 throws instead of being replaced.
  return j.dump(-1, ' ', false, ojson::error_handler_t::strict);
}

InstructionRecord parse_record(std::string_view line, std::size_t line_no) {
  const ojson j = parse_object(line, line_no);
  InstructionRecord rec;
  rec.id = require_string(j, "id", line_no);
  rec.lang = LanguageTag::unchecked(require_string(j, "lang", line_no));
  rec.instruction = require_string(j, "instruction", line_no);
  rec.output = require_string(j, "output", line_no);
  const std::string source = require_string(j, "source", line_no);
  auto src = parse_source(source);
  if (!src) fail(line_no, "unknown source '" + source + "'");
  rec.source = *src;
  if (auto it = j.find("trace"); it != j.end()) rec.trace = trace_from_json(*it, line_no);
  const std::string split = require_string(j, "split", line_no);
  auto sp = parse_split(split);
  if (!sp) fail(line_no, "unknown split '" + split + "'");
  rec.split = *sp;
  return rec;
}

std::string serialize_jsonl(std::span<const InstructionRecord> recs, SerializeOptions opts) {
  std::string out;
  for (const auto& r : recs) {
    out += serialize_record(r, opts);
    out += '\n';
  }
  return out;
}

std::vector<InstructionRecord> parse_jsonl(std::string_view bytes) {
  std::vector<InstructionRecord> out;
  for_each_line_in(bytes, [&](std::string_view line, std::size_t line_no) {
    if (text::trim(line).empty()) return;
    out.push_back(parse_record(line, line_no));
  });
  return out;
}

void write_jsonl(std::ostream& out, std::span<const InstructionRecord> recs,
                 SerializeOptions opts) {
  for (const auto& r : recs) out << serialize_record(r, opts) << '\n';
}

std::vector<InstructionRecord> read_records(const std::filesystem::path& path) {
  std::vector<InstructionRecord> out;
  for_each_line(path, [&](std::string_view line, std::size_t line_no) {
    if (text::trim(line).empty()) return;
    out.push_back(parse_record(line, line_no));
  });
  return out;
}

std::string serialize_document(const SourceDocument& doc) {
  ojson j;
  j["id"] = doc.id;
  j["lang"] = doc.lang.str();
  j["text"] = doc.text;
  j["source"] = std::string(to_string(doc.source));
  ojson meta = ojson::object();
  for (const auto& [k, v] : doc.meta) meta[k] = v;
  j["meta"] = std::move(meta);
  return j.dump(-1, ' ', false, ojson::error_handler_t::strict);
}

SourceDocument parse_document(std::string_view line, std::size_t line_no) {
  const ojson j = parse_object(line, line_no);
  SourceDocument doc;
  doc.id = require_string(j, "id", line_no);
  doc.lang = LanguageTag::unchecked(require_string(j, "lang", line_no));
  doc.text = require_string(j, "text", line_no);
  const std::string source = require_string(j, "source", line_no);
  auto src = parse_source(source);
  if (!src) fail(line_no, "unknown source '" + source + "'");
  doc.source = *src;
  if (auto it = j.find("meta"); it != j.end() && it->is_object())
    for (auto m = it->begin(); m != it->end(); ++m)
      if (m->is_string()) doc.meta[m.key()] = m->get<std::string>();
  return doc;
}

void for_each_line(const std::filesystem::path& path,
                   const std::function<void(std::string_view, std::size_t)>& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read file: " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!text::is_valid_utf8(line)) throw Utf8Error(line_no, "invalid UTF-8 in " + path.string());
    fn(line, line_no);
  }
  if (in.bad()) throw std::runtime_error("read error: " + path.string());
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write file: " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace muri
