// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "muri/adapters.hpp"
#include "muri/assembly.hpp"
#include "muri/dedup.hpp"
#include "muri/filters.hpp"
#include "muri/http_backend.hpp"
#include "muri/inference.hpp"
#include "muri/ingest.hpp"
#include "muri/reverse_instruction.hpp"

namespace muri {

/// Invalid configuration. The CLI maps it to exit status 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A backend was unreachable while running in strict mode. Checkpoints of
/// completed stages are left in place. The CLI maps it to exit status 1.
class BackendDown : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Either the in-process mock or a remote endpoint, never both.
struct RoleEndpoint {
  bool mock = false;
  std::optional<InferenceEndpointConfig> http;
};

struct RunConfig {
  std::filesystem::path manifest;
  std::map<ModelRole, RoleEndpoint> endpoints;
  MockConfig mock;
  ClientLimits limits;
  QualityGateConfig quality_gate;
  MuriConfig muri;
  FilterConfig filters;
  DedupParams dedup;
  SplitPlan split;
  bool split_seed_explicit = false;  // otherwise derived from seed
  SupNatCaps supnatinst;
  FlanQuotas flan;
  std::optional<std::filesystem::path> few_shot;
  std::uint64_t seed = 0;
  std::filesystem::path checkpoint_dir = "muri-run";
  std::optional<std::filesystem::path> output_dir;  // default: <checkpoint_dir>/release
  std::size_t workers = 1;
  /// Abort with BackendDown when any call reports a backend unavailable.
  bool strict = false;
  bool strip_trace = false;

  /// Parses the JSON config. Relative paths resolve against base_dir.
  /// Throws ConfigError.
  static RunConfig parse(std::string_view json, const std::filesystem::path& base_dir = ".");
  static RunConfig load(const std::filesystem::path& path);

  /// MURI_<ROLE>_URL replaces the base_url of a remote role; MURI_API_KEY
  /// sets the bearer token of every remote role. Mock roles are untouched.
  void apply_env(const std::function<std::optional<std::string>(const std::string&)>& getenv);
  void apply_env();

  /// Sets the run seed, re-deriving the split seed unless the config fixed it.
  void set_seed(std::uint64_t value);

  /// Every role served by the mock.
  void force_mock();

  /// Throws ConfigError when a role has no endpoint, or both mock and a
  /// remote endpoint, or any section violates its own invariants.
  void validate() const;

  std::filesystem::path release_dir() const;

  /// Stable digest of everything that affects stage outputs. Worker count
  /// and directories are excluded.
  std::string fingerprint() const;
};

/// Builds one backend per role (a shared mock for mock roles).
RoleBackends make_backends(const RunConfig& cfg);

struct StageReport {
  std::string name;
  bool skipped = false;  // resumed from a checkpoint
  std::size_t input = 0;
  std::size_t output = 0;
  std::map<std::string, std::size_t> drops;  // reason code -> count
  std::string completed_at;
};

struct RunReport {
  std::size_t documents = 0;  // raw documents read from the corpus
  std::size_t adapted = 0;    // records produced by the adapters
  std::size_t surviving = 0;  // records in the release
  std::map<std::string, std::size_t> drops;
  std::vector<StageReport> stages;
  std::array<std::size_t, 3> splits{};
  std::vector<std::string> warnings;

  std::size_t ingested() const { return documents + adapted; }
  std::size_t dropped() const;
  /// ingested == surviving + dropped
  bool balanced() const { return ingested() == surviving + dropped(); }
  std::string to_json() const;
};

/// Drop-reason code without any ":detail" suffix.
std::string reason_code(std::string_view reason);

/// Stage names in execution order: ingest, muri, filter, adapt, dedup,
/// assemble.
const std::vector<std::string>& stage_names();

struct PipelineHooks {
  std::function<void(std::string_view)> log;
  /// Replaces make_backends(cfg), e.g. with instrumented fakes.
  std::optional<RoleBackends> backends;
};

/// Runs every stage, resuming after the last stage whose checkpoint matches
/// the config fingerprint. Each stage writes <stage>.jsonl, optional
/// <stage>.drops.jsonl and finally <stage>.done.json into the checkpoint
/// directory, all by write-then-rename.
RunReport run_pipeline(const RunConfig& cfg, const PipelineHooks& hooks = {});

/// Calls fn(i) for i in [0, n) on up to workers threads.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

/// Records from every adapter-format entry of a manifest. WikiHow, OASST
/// and xP3 entries contribute in manifest order; SupNatInst tasks and FLAN
/// rows are pooled across entries and sampled once, appended last.
/// Unusable lines are skipped into report.
std::vector<InstructionRecord> adapt_manifest(const CorpusManifest& manifest,
                                              const LanguageRegistry& registry,
                                              std::uint64_t seed, const SupNatCaps& caps,
                                              const FlanQuotas& quotas, AdapterReport& report);

}  // namespace muri
