// SPDX-License-Identifier: Apache-2.0
#include "muri/record.hpp"

#include <algorithm>

#include "muri/hash.hpp"
#include "muri/text.hpp"

namespace muri {

namespace {

constexpr std::array<std::string_view, 7> kSourceNames{"culturax", "wikipedia", "wikihow",
                                                       "supnatinst", "xp3", "oasst", "flan"};
constexpr std::array<std::string_view, 4> kSplitNames{"train", "validation", "test",
                                                      "unassigned"};
constexpr std::array<std::string_view, 7> kStageNames{
    "translate_doc", "generate_inst", "localize_inst", "lid_check",
    "keyword_filter", "content_screen", "dedup"};

// Bytes of document text that feed the content id.
constexpr std::size_t kIdTextPrefix = 256;

}  // namespace

std::string_view to_string(Source s) { return kSourceNames[static_cast<std::size_t>(s)]; }

std::optional<Source> parse_source(std::string_view name) {
  for (std::size_t i = 0; i < kSourceNames.size(); ++i)
    if (kSourceNames[i] == name) return static_cast<Source>(i);
  return std::nullopt;
}

std::string_view to_string(Split s) { return kSplitNames[static_cast<std::size_t>(s)]; }

std::optional<Split> parse_split(std::string_view name) {
  for (std::size_t i = 0; i < kSplitNames.size(); ++i)
    if (kSplitNames[i] == name) return static_cast<Split>(i);
  return std::nullopt;
}

std::string_view to_string(Stage s) { return kStageNames[static_cast<std::size_t>(s)]; }

std::optional<Stage> parse_stage(std::string_view name) {
  for (std::size_t i = 0; i < kStageNames.size(); ++i)
    if (kStageNames[i] == name) return static_cast<Stage>(i);
  return std::nullopt;
}

void StageTrace::pass(Stage s, std::optional<std::string> model_id,
                      std::optional<std::string> note) {
  stages.push_back({std::string(to_string(s)), StageStatus::pass, std::move(note),
                    std::move(model_id)});
}

void StageTrace::drop(Stage s, std::string reason, std::optional<std::string> model_id) {
  stages.push_back(
      {std::string(to_string(s)), StageStatus::drop, std::move(reason), std::move(model_id)});
}

const StageEntry* StageTrace::first_drop() const {
  for (const auto& e : stages)
    if (e.status == StageStatus::drop) return &e;
  return nullptr;
}

const StageEntry* StageTrace::find(Stage s) const {
  for (const auto& e : stages)
    if (e.name == to_string(s)) return &e;
  return nullptr;
}

std::vector<Violation> validate_trace(const StageTrace& trace) {
  std::vector<Violation> out;
  int last_rank = -1;
  std::array<bool, kStageNames.size()> seen{};
  for (std::size_t i = 0; i < trace.stages.size(); ++i) {
    const StageEntry& e = trace.stages[i];
    auto stage = parse_stage(e.name);
    if (!stage) {
      out.push_back({"trace.stages", "unknown stage name '" + e.name + "'"});
      continue;
    }
    const int rank = static_cast<int>(*stage);
    if (seen[static_cast<std::size_t>(rank)])
      out.push_back({"trace.stages", "stage '" + e.name + "' appears more than once"});
    else if (rank < last_rank)
      out.push_back({"trace.stages", "stage '" + e.name + "' out of pipeline order"});
    seen[static_cast<std::size_t>(rank)] = true;
    last_rank = std::max(last_rank, rank);
    if (e.status == StageStatus::drop && i + 1 != trace.stages.size())
      out.push_back({"trace.stages", "first drop must be the last entry"});
  }
  return out;
}

std::vector<Violation> validate_record(const InstructionRecord& rec,
                                       const LanguageRegistry& registry) {
  std::vector<Violation> out;
  if (rec.id.empty()) out.push_back({"id", "id nonempty"});
  if (!rec.lang.well_formed())
    out.push_back({"lang", "LanguageTag pattern ^[a-z]{3}_[A-Z][a-z]{3}$"});
  else if (!registry.contains(rec.lang))
    out.push_back({"lang", "LanguageTag present in registry"});
  if (text::trim(rec.instruction).empty())
    out.push_back({"instruction", "instruction nonempty"});
  else if (!text::is_valid_utf8(rec.instruction))
    out.push_back({"instruction", "valid UTF-8"});
  if (text::trim(rec.output).empty())
    out.push_back({"output", "output nonempty"});
  else if (!text::is_valid_utf8(rec.output))
    out.push_back({"output", "valid UTF-8"});
  for (auto& v : validate_trace(rec.trace)) out.push_back(std::move(v));
  if (rec.trace.dropped() && rec.split != Split::unassigned)
    out.push_back({"split", "dropped record must stay unassigned"});
  return out;
}

std::uint64_t content_hash(Source source, std::string_view original_key, std::string_view text) {
  std::uint64_t h = hash64(to_string(source));
  h = hash_combine(h, hash64(original_key));
  return hash_combine(h, hash64(text::utf8_prefix(text, kIdTextPrefix)));
}

std::string content_id(Source source, std::string_view original_key, std::string_view text) {
  return std::string(to_string(source)) + "-" + to_hex(content_hash(source, original_key, text));
}

}  // namespace muri
