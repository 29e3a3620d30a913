// SPDX-License-Identifier: Apache-2.0
#include "muri/adapters.hpp"

#include <algorithm>
#include <map>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "muri/ingest.hpp"
#include "muri/rng.hpp"
#include "muri/text.hpp"

namespace muri {

namespace {

using json = nlohmann::json;

constexpr std::size_t kMaxWarnings = 50;

json parse_json_object(std::string_view s, const char* what) {
  json j;
  try {
    j = json::parse(s);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string(what) + ": malformed JSON: " + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument(std::string(what) + ": expected an object");
  return j;
}

std::string get_string(const json& j, std::initializer_list<const char*> keys) {
  for (const char* k : keys) {
    auto it = j.find(k);
    if (it != j.end() && it->is_string()) return it->get<std::string>();
  }
  return {};
}

// Upstream metadata fields are often single-element lists.
std::string first_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) return {};
  if (it->is_string()) return it->get<std::string>();
  if (it->is_array() && !it->empty() && it->front().is_string())
    return it->front().get<std::string>();
  return {};
}

std::optional<LanguageTag> resolve_lang(const LanguageRegistry& registry, std::string_view alias) {
  if (text::trim(alias).empty()) return std::nullopt;
  return registry.resolve(alias);
}

InstructionRecord make_record(Source source, std::string_view key, LanguageTag lang,
                              std::string instruction, std::string output) {
  InstructionRecord rec;
  rec.id = content_id(source, key, instruction + "\n" + output);
  rec.lang = std::move(lang);
  rec.instruction = std::move(instruction);
  rec.output = std::move(output);
  rec.source = source;
  return rec;
}

}  // namespace

void AdapterReport::warn(std::string message) {
  ++skipped;
  if (warnings.size() < kMaxWarnings) warnings.push_back(std::move(message));
}

// ---------------------------------------------------------------------------
// WikiHow

WikiHowArticle parse_wikihow_article(std::string_view line, const LanguageRegistry& registry) {
  const json j = parse_json_object(line, "wikihow article");
  WikiHowArticle a;
  const std::string lang = get_string(j, {"lang"});
  auto tag = resolve_lang(registry, lang);
  if (!tag) throw std::invalid_argument("wikihow article: unknown language '" + lang + "'");
  a.lang = *tag;
  a.title = std::string(text::trim(get_string(j, {"title"})));
  a.abstract = std::string(text::trim(get_string(j, {"abstract"})));
  a.url = get_string(j, {"url"});
  if (a.title.empty()) throw std::invalid_argument("wikihow article: empty title");
  auto steps = j.find("steps");
  if (steps == j.end() || !steps->is_array() || steps->empty())
    throw std::invalid_argument("wikihow article '" + a.title + "': no steps");
  for (const auto& s : *steps) {
    if (!s.is_object()) throw std::invalid_argument("wikihow article: step is not an object");
    WikiHowStep step{std::string(text::trim(get_string(s, {"title"}))),
                     std::string(text::trim(get_string(s, {"text"})))};
    if (step.title.empty()) throw std::invalid_argument("wikihow article: step without title");
    a.steps.push_back(std::move(step));
  }
  return a;
}

std::uint64_t wikihow_seed(std::string_view url, std::uint64_t run_seed) {
  return derive_seed(run_seed, hash64(url));
}

WikiHowLayout draw_wikihow_layout(std::string_view url, std::uint64_t run_seed) {
  Rng rng(wikihow_seed(url, run_seed));
  WikiHowLayout layout;
  layout.include_abstract = rng.coin();
  layout.full_steps = rng.coin();
  return layout;
}

std::string render_wikihow_answer(const WikiHowArticle& a, const WikiHowLayout& layout) {
  std::vector<std::string> parts;
  if (layout.include_abstract && !a.abstract.empty()) parts.push_back(a.abstract);
  if (layout.full_steps) {
    for (std::size_t i = 0; i < a.steps.size(); ++i) {
      std::string part = std::to_string(i + 1) + ". " + a.steps[i].title;
      if (!a.steps[i].text.empty()) part += "\n" + a.steps[i].text;
      parts.push_back(std::move(part));
    }
  } else {
    std::string list;
    for (std::size_t i = 0; i < a.steps.size(); ++i) {
      if (i) list += "\n";
      list += std::to_string(i + 1) + ". " + a.steps[i].title;
    }
    parts.push_back(std::move(list));
  }
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += "\n\n";
    out += parts[i];
  }
  return out;
}

InstructionRecord render_wikihow(const WikiHowArticle& a, std::uint64_t run_seed) {
  const WikiHowLayout layout = draw_wikihow_layout(a.url, run_seed);
  InstructionRecord rec = make_record(Source::wikihow, a.url.empty() ? a.title : a.url, a.lang,
                                      a.title, render_wikihow_answer(a, layout));
  rec.trace.rng_seed = wikihow_seed(a.url, run_seed);
  return rec;
}

// ---------------------------------------------------------------------------
// SuperNatural Instructions

bool SupNatTask::is_translation() const {
  return std::any_of(categories.begin(), categories.end(), [](const std::string& c) {
    return text::to_lower_ascii(c).find("translation") != std::string::npos;
  });
}

std::string SupNatTask::task_type() const {
  return categories.empty() ? std::string("uncategorized") : categories.front();
}

SupNatTask parse_supnatinst_task(std::string_view s, const LanguageRegistry& registry) {
  const json j = parse_json_object(s, "supnatinst task");
  SupNatTask t;
  t.name = get_string(j, {"name", "Name"});
  auto def = j.find("Definition");
  if (def == j.end()) def = j.find("definition");
  if (def != j.end()) {
    if (def->is_string()) {
      t.definition = def->get<std::string>();
    } else if (def->is_array()) {
      for (const auto& d : *def)
        if (d.is_string()) t.definition += (t.definition.empty() ? "" : "\n") + d.get<std::string>();
    }
  }
  t.definition = std::string(text::trim(t.definition));
  if (auto cats = j.find("Categories"); cats != j.end() && cats->is_array())
    for (const auto& c : *cats)
      if (c.is_string()) t.categories.push_back(c.get<std::string>());
  std::string lang = get_string(j, {"lang"});
  if (lang.empty()) lang = first_string(j, "Output_language");
  t.lang = resolve_lang(registry, lang);
  auto inst = j.find("Instances");
  if (inst == j.end()) inst = j.find("instances");
  if (inst != j.end() && inst->is_array()) {
    for (const auto& i : *inst) {
      if (!i.is_object()) continue;
      SupNatInstance x;
      x.input = get_string(i, {"input"});
      if (auto out = i.find("output"); out != i.end()) {
        if (out->is_string())
          x.outputs.push_back(out->get<std::string>());
        else if (out->is_array())
          for (const auto& o : *out)
            if (o.is_string()) x.outputs.push_back(o.get<std::string>());
      }
      t.instances.push_back(std::move(x));
    }
  }
  return t;
}

std::vector<InstructionRecord> adapt_supnatinst(const std::vector<SupNatTask>& tasks,
                                                std::uint64_t seed, const SupNatCaps& caps,
                                                AdapterReport* report) {
  AdapterReport local;
  AdapterReport& rep = report ? *report : local;

  struct Item {
    const SupNatTask* task;
    const SupNatInstance* instance;
  };
  // Output groups in first-appearance order: each translation task is its
  // own group; other tasks pool into their task type.
  std::vector<std::pair<std::string, std::vector<Item>>> groups;
  std::map<std::string, std::size_t> group_index;
  std::vector<std::size_t> group_cap;
  for (const SupNatTask& t : tasks) {
    if (!t.lang) {
      rep.warn("supnatinst task '" + t.name + "': missing language metadata");
      continue;
    }
    const std::string key = t.is_translation() ? "task:" + t.name : "type:" + t.task_type();
    auto [it, inserted] = group_index.emplace(key, groups.size());
    if (inserted) {
      groups.push_back({key, {}});
      group_cap.push_back(t.is_translation() ? caps.per_translation_task : caps.per_task_type);
    }
    for (const auto& inst : t.instances) {
      if (inst.outputs.empty() || text::trim(inst.outputs.front()).empty() ||
          text::trim(inst.input).empty()) {
        rep.warn("supnatinst task '" + t.name + "': instance without input or reference");
        continue;
      }
      groups[it->second].second.push_back({&t, &inst});
    }
  }

  std::vector<InstructionRecord> out;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    ReservoirSampler<Item> sampler(group_cap[g], derive_seed(seed, groups[g].first));
    for (const Item& item : groups[g].second) sampler.push(item);
    for (const Item& item : std::move(sampler).take()) {
      std::string instruction = item.task->definition.empty()
                                    ? item.instance->input
                                    : item.task->definition + "\n\n" + item.instance->input;
      out.push_back(make_record(Source::supnatinst, item.task->name, *item.task->lang,
                                std::move(instruction), item.instance->outputs.front()));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// OpenAssistant

void ChatTree::validate() const {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (!index.emplace(nodes[i].id, i).second)
      throw std::invalid_argument("chat tree: duplicate node id " + nodes[i].id);
  std::size_t roots = 0;
  for (const auto& n : nodes) {
    if (!n.parent_id) {
      ++roots;
      continue;
    }
    if (!index.count(*n.parent_id))
      throw std::invalid_argument("chat tree: node " + n.id + " has unknown parent");
  }
  if (roots != 1)
    throw std::invalid_argument("chat tree: expected exactly one root, found " +
                                std::to_string(roots));
  // Walking up from any node must reach the root within |nodes| steps.
  for (const auto& n : nodes) {
    const ChatNode* cur = &n;
    std::size_t steps = 0;
    while (cur->parent_id) {
      if (++steps > nodes.size()) throw std::invalid_argument("chat tree: cycle at " + n.id);
      cur = &nodes[index.at(*cur->parent_id)];
    }
  }
}

namespace {

void flatten_nested(const json& msg, const std::optional<std::string>& parent,
                    const LanguageRegistry& registry, ChatTree& tree) {
  if (!msg.is_object()) throw std::invalid_argument("chat tree: message is not an object");
  ChatNode node;
  node.id = get_string(msg, {"message_id", "id"});
  node.parent_id = parent;
  const std::string role = get_string(msg, {"role"});
  if (role == "prompter")
    node.role = ChatRole::prompter;
  else if (role == "assistant")
    node.role = ChatRole::assistant;
  else
    throw std::invalid_argument("chat tree: unknown role '" + role + "'");
  node.text = get_string(msg, {"text"});
  const std::string lang = get_string(msg, {"lang"});
  auto tag = resolve_lang(registry, lang);
  if (!tag) throw std::invalid_argument("chat tree: unknown language '" + lang + "'");
  node.lang = *tag;
  if (node.id.empty()) throw std::invalid_argument("chat tree: message without id");
  const std::string id = node.id;
  tree.nodes.push_back(std::move(node));
  if (auto replies = msg.find("replies"); replies != msg.end() && replies->is_array())
    for (const auto& r : *replies) flatten_nested(r, id, registry, tree);
}

}  // namespace

ChatTree parse_chat_tree(std::string_view s, const LanguageRegistry& registry) {
  const json j = parse_json_object(s, "chat tree");
  ChatTree tree;
  if (auto prompt = j.find("prompt"); prompt != j.end()) {
    flatten_nested(*prompt, std::nullopt, registry, tree);
  } else {
    auto nodes = j.find("nodes");
    if (nodes == j.end() || !nodes->is_array())
      throw std::invalid_argument("chat tree: expected 'prompt' or 'nodes'");
    for (const auto& n : *nodes) {
      if (!n.is_object()) throw std::invalid_argument("chat tree: node is not an object");
      json copy = n;
      copy.erase("replies");
      ChatTree single;
      std::optional<std::string> parent;
      if (auto p = n.find("parent_id"); p != n.end() && p->is_string())
        parent = p->get<std::string>();
      flatten_nested(copy, parent, registry, single);
      tree.nodes.push_back(std::move(single.nodes.front()));
    }
  }
  tree.validate();
  return tree;
}

std::vector<InstructionRecord> adapt_oasst(const ChatTree& tree) {
  tree.validate();
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) index.emplace(tree.nodes[i].id, i);

  std::vector<std::size_t> depth(tree.nodes.size(), 0);
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    std::size_t d = 0;
    for (const ChatNode* cur = &tree.nodes[i]; cur->parent_id;
         cur = &tree.nodes[index.at(*cur->parent_id)])
      ++d;
    depth[i] = d;
  }

  std::vector<InstructionRecord> out;
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const ChatNode& p = tree.nodes[i];
    if (p.role != ChatRole::prompter || (depth[i] != 0 && depth[i] != 2)) continue;
    if (text::trim(p.text).empty()) continue;
    const ChatNode* reply = nullptr;
    for (const auto& c : tree.nodes) {
      if (c.parent_id && *c.parent_id == p.id && c.role == ChatRole::assistant &&
          !text::trim(c.text).empty()) {
        reply = &c;
        break;
      }
    }
    if (!reply) continue;
    out.push_back(make_record(Source::oasst, p.id + "/" + reply->id, p.lang, p.text, reply->text));
  }
  return out;
}

// ---------------------------------------------------------------------------
// xP3 / FLAN

TaskRow parse_task_row(std::string_view s, const LanguageRegistry& registry) {
  const json j = parse_json_object(s, "task row");
  TaskRow row;
  row.input = get_string(j, {"input", "inputs"});
  for (const char* key : {"target", "targets"}) {
    auto it = j.find(key);
    if (it != j.end() && it->is_string()) {
      row.target = it->get<std::string>();
      break;
    }
  }
  row.lang = resolve_lang(registry, get_string(j, {"lang", "language"}));
  row.subset = get_string(j, {"subset"});
  return row;
}

std::vector<InstructionRecord> adapt_xp3(const std::vector<TaskRow>& rows, AdapterReport* report) {
  AdapterReport local;
  AdapterReport& rep = report ? *report : local;
  std::vector<InstructionRecord> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const TaskRow& r = rows[i];
    if (!r.target || text::trim(*r.target).empty()) {
      rep.warn("xp3 row " + std::to_string(i) + ": missing target");
      continue;
    }
    if (text::trim(r.input).empty() || !r.lang) {
      rep.warn("xp3 row " + std::to_string(i) + ": missing input or language");
      continue;
    }
    out.push_back(make_record(Source::xp3, std::to_string(i), *r.lang, r.input, *r.target));
  }
  return out;
}

std::vector<InstructionRecord> adapt_flan(const std::vector<TaskRow>& rows, std::uint64_t seed,
                                          const FlanQuotas& quotas, AdapterReport* report) {
  AdapterReport local;
  AdapterReport& rep = report ? *report : local;
  ReservoirSampler<std::size_t> main(quotas.main, derive_seed(seed, "flan-main"));
  ReservoirSampler<std::size_t> cot(quotas.cot, derive_seed(seed, "flan-cot"));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const TaskRow& r = rows[i];
    if (!r.target || text::trim(*r.target).empty() || text::trim(r.input).empty()) {
      rep.warn("flan row " + std::to_string(i) + ": missing input or target");
      continue;
    }
    const std::string subset = text::to_lower_ascii(r.subset);
    if (subset == "cot")
      cot.push(i);
    else if (subset.empty() || subset == "main")
      main.push(i);
    else
      rep.warn("flan row " + std::to_string(i) + ": unknown subset '" + r.subset + "'");
  }
  std::vector<std::size_t> picked = std::move(main).take();
  for (std::size_t i : std::move(cot).take()) picked.push_back(i);
  std::sort(picked.begin(), picked.end());
  std::vector<InstructionRecord> out;
  out.reserve(picked.size());
  for (std::size_t i : picked) {
    const TaskRow& r = rows[i];
    out.push_back(make_record(Source::flan, std::to_string(i), r.lang.value_or(kEnglish), r.input,
                              *r.target));
  }
  return out;
}

}  // namespace muri
