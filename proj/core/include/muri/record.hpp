// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "muri/language.hpp"

namespace muri {

enum class Source { culturax, wikipedia, wikihow, supnatinst, xp3, oasst, flan };

inline constexpr std::array kAllSources{Source::culturax,   Source::wikipedia, Source::wikihow,
                                        Source::supnatinst, Source::xp3,       Source::oasst,
                                        Source::flan};

std::string_view to_string(Source s);
std::optional<Source> parse_source(std::string_view name);

/// True for sources whose records come out of the reverse-instruction path.
constexpr bool is_reverse_instruction_source(Source s) {
  return s == Source::culturax || s == Source::wikipedia;
}

enum class Split { train, validation, test, unassigned };

std::string_view to_string(Split s);
std::optional<Split> parse_split(std::string_view name);

enum class StageStatus { pass, drop };

/// Pipeline stages in execution order. A trace lists them in this order.
enum class Stage {
  translate_doc,
  generate_inst,
  localize_inst,
  lid_check,
  keyword_filter,
  content_screen,
  dedup,
};

inline constexpr std::array kStageOrder{Stage::translate_doc, Stage::generate_inst,
                                        Stage::localize_inst, Stage::lid_check,
                                        Stage::keyword_filter, Stage::content_screen,
                                        Stage::dedup};

std::string_view to_string(Stage s);
std::optional<Stage> parse_stage(std::string_view name);

struct StageEntry {
  std::string name;
  StageStatus status = StageStatus::pass;
  std::optional<std::string> reason;
  std::optional<std::string> model_id;

  friend bool operator==(const StageEntry&, const StageEntry&) = default;
};

/// Per-record audit of every stage the record went through.
struct StageTrace {
  std::optional<std::string> doc_en;
  std::optional<std::string> inst_en;
  std::vector<StageEntry> stages;
  std::uint64_t rng_seed = 0;
  /// The English document was cut to fit the generation prompt budget.
  bool truncated = false;

  void pass(Stage s, std::optional<std::string> model_id = std::nullopt,
            std::optional<std::string> note = std::nullopt);
  void drop(Stage s, std::string reason, std::optional<std::string> model_id = std::nullopt);

  const StageEntry* first_drop() const;
  bool dropped() const { return first_drop() != nullptr; }
  const StageEntry* find(Stage s) const;

  friend bool operator==(const StageTrace&, const StageTrace&) = default;
};

struct SourceDocument {
  std::string id;
  LanguageTag lang;
  std::string text;
  Source source = Source::culturax;
  std::map<std::string, std::string> meta;  // url, title, license, ...

  friend bool operator==(const SourceDocument&, const SourceDocument&) = default;
};

struct InstructionRecord {
  std::string id;
  LanguageTag lang;
  std::string instruction;
  std::string output;
  Source source = Source::culturax;
  StageTrace trace;
  Split split = Split::unassigned;

  friend bool operator==(const InstructionRecord&, const InstructionRecord&) = default;
};

struct Violation {
  std::string field;
  std::string rule;

  friend bool operator==(const Violation&, const Violation&) = default;
};

/// Every type invariant, checked. An empty result means the record is valid.
std::vector<Violation> validate_record(const InstructionRecord& rec,
                                       const LanguageRegistry& registry);

/// Trace-only invariants (stage order, uniqueness, drop-is-last).
std::vector<Violation> validate_trace(const StageTrace& trace);

/// Content-addressed id: hash of (source, original id or url, text prefix).
/// Reruns over the same inputs produce the same ids.
std::string content_id(Source source, std::string_view original_key, std::string_view text);
std::uint64_t content_hash(Source source, std::string_view original_key, std::string_view text);

}  // namespace muri
