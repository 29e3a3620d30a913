// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "muri/language.hpp"
#include "muri/record.hpp"

namespace muri {

/// Warnings collected while adapting; records are still produced for the
/// inputs that were usable.
struct AdapterReport {
  std::size_t skipped = 0;
  std::vector<std::string> warnings;

  void warn(std::string message);
};

// ---------------------------------------------------------------------------
// WikiHow

struct WikiHowStep {
  std::string title;
  std::string text;
};

struct WikiHowArticle {
  LanguageTag lang;
  std::string title;
  std::string abstract;
  std::vector<WikiHowStep> steps;
  std::string url;
};

/// {"lang","title","abstract","steps":[{"title","text"}],"url"}; throws
/// std::invalid_argument on missing fields, empty title or no steps.
WikiHowArticle parse_wikihow_article(std::string_view json_line, const LanguageRegistry& registry);

struct WikiHowLayout {
  bool include_abstract = false;
  bool full_steps = false;  // step texts as well as step titles
};

/// Two fair coin flips from a generator seeded by (run_seed, url hash).
WikiHowLayout draw_wikihow_layout(std::string_view url, std::uint64_t run_seed);
std::uint64_t wikihow_seed(std::string_view url, std::uint64_t run_seed);

/// Answer text for a layout: optional abstract, then numbered steps
/// ("1. title" or "1. title\ntext"), parts joined by blank lines.
std::string render_wikihow_answer(const WikiHowArticle& article, const WikiHowLayout& layout);

/// instruction = title, output = rendered answer.
InstructionRecord render_wikihow(const WikiHowArticle& article, std::uint64_t run_seed);

// ---------------------------------------------------------------------------
// SuperNatural Instructions

struct SupNatInstance {
  std::string input;
  std::vector<std::string> outputs;
};

struct SupNatTask {
  std::string name;
  std::string definition;
  std::vector<std::string> categories;
  std::optional<LanguageTag> lang;  // unresolved metadata leaves this empty
  std::vector<SupNatInstance> instances;

  bool is_translation() const;
  /// First category, the pooling bucket for non-translation tasks.
  std::string task_type() const;
};

/// Accepts the upstream task layout ("Definition", "Categories",
/// "Output_language", "Instances":[{"input","output":[...]}]) plus an optional
/// "name" and a direct "lang" tag.
SupNatTask parse_supnatinst_task(std::string_view json, const LanguageRegistry& registry);

struct SupNatCaps {
  std::size_t per_translation_task = 200;
  std::size_t per_task_type = 500;
};

/// Translation tasks: up to per_translation_task instances each. All other
/// tasks are pooled by task type and up to per_task_type instances are drawn
/// from each pool. instruction = definition + "\n\n" + input, output = first
/// reference. Tasks without language metadata are skipped with a warning.
std::vector<InstructionRecord> adapt_supnatinst(const std::vector<SupNatTask>& tasks,
                                                std::uint64_t seed, const SupNatCaps& caps = {},
                                                AdapterReport* report = nullptr);

// ---------------------------------------------------------------------------
// OpenAssistant chat trees

enum class ChatRole { prompter, assistant };

struct ChatNode {
  std::string id;
  std::optional<std::string> parent_id;
  ChatRole role = ChatRole::prompter;
  std::string text;
  LanguageTag lang;
};

/// Nodes in child order: siblings keep their relative order.
struct ChatTree {
  std::vector<ChatNode> nodes;

  /// Throws std::invalid_argument unless there is exactly one root, every
  /// parent exists and the tree is acyclic.
  void validate() const;
};

/// Accepts a flat {"nodes":[{"id","parent_id","role","text","lang"}]} tree
/// or the nested export ({"prompt":{"message_id","role","text","lang",
/// "replies":[...]}}).
ChatTree parse_chat_tree(std::string_view json, const LanguageRegistry& registry);

/// One pair per prompter node at depth 0 or 2 (first two turns): the
/// prompter text and its first assistant reply. Prompters with empty text
/// or no assistant reply are skipped. Throws on a malformed tree.
std::vector<InstructionRecord> adapt_oasst(const ChatTree& tree);

// ---------------------------------------------------------------------------
// xP3 and FLAN rows

struct TaskRow {
  std::string input;
  std::optional<std::string> target;
  std::optional<LanguageTag> lang;
  std::string subset;  // FLAN: "main" or "cot"
};

/// Accepts input/inputs, target/targets, lang (tag, ISO code or name) and
/// subset keys.
TaskRow parse_task_row(std::string_view json, const LanguageRegistry& registry);

std::vector<InstructionRecord> adapt_xp3(const std::vector<TaskRow>& rows,
                                         AdapterReport* report = nullptr);

struct FlanQuotas {
  std::size_t main = 50000;
  std::size_t cot = 50000;
};

/// Seeded draw of quotas.main rows from the main subset and quotas.cot from
/// the chain-of-thought subset. Rows default to English.
std::vector<InstructionRecord> adapt_flan(const std::vector<TaskRow>& rows, std::uint64_t seed,
                                          const FlanQuotas& quotas = {},
                                          AdapterReport* report = nullptr);

}  // namespace muri
