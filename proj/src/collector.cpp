#include "pba/collector.hpp"

#include <ctime>
#include <filesystem>
#include <fstream>
#include <future>
#include <unordered_set>

#include "json.hpp"
#include "pba/errors.hpp"

namespace pba {

namespace {

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buffer;
}

struct ValuesHash {
  std::size_t operator()(const AttributeValues& values) const {
    std::size_t h = 0;
    for (const auto& v : values) h = h * 1000003u ^ std::hash<std::string>{}(v);
    return h;
  }
};

void write_manifest(const CollectionOptions& options, const CollectionRun& run) {
  if (options.manifest_path.empty()) return;
  nlohmann::ordered_json manifest;
  manifest["tool"] = "pba";
  manifest["version"] = PBA_VERSION;
  manifest["run_id"] = run.run_id;
  manifest["model"] = options.model_id;
  manifest["endpoint"] = options.endpoint;
  manifest["prompt_variant"] = variant_key(options.variant);
  manifest["prompt_text"] = options.prompt_text;
  manifest["temperature"] = options.temperature;
  manifest["target_unique"] = options.target_unique;
  manifest["max_attempts"] = options.max_attempts;
  manifest["counters"] = {
      {"requests", run.counters.requests},
      {"parse_failures", run.counters.parse_failures},
      {"rejected_records", run.counters.rejected_records},
      {"duplicates_discarded", run.counters.duplicates_discarded},
      {"unique_collected", run.counters.unique_collected},
  };
  manifest["resumed_from"] = run.resumed_from;
  manifest["status"] = status_key(run.status);
  if (!run.error.empty()) manifest["error"] = run.error;
  manifest["started_at"] = run.started_at;
  manifest["finished_at"] = run.finished_at;
  const std::string tmp = options.manifest_path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << manifest.dump(2) << '\n';
  }
  std::filesystem::rename(tmp, options.manifest_path);
}

}  // namespace

std::string_view status_key(CollectionStatus status) {
  switch (status) {
    case CollectionStatus::kCompleted: return "completed";
    case CollectionStatus::kBudgetExhausted: return "budget_exhausted";
    case CollectionStatus::kProviderFailed: return "provider_failed";
  }
  return "completed";
}

CollectionRun collect_until_unique(CompletionProvider& provider, const CollectionOptions& input) {
  CollectionOptions options = input;
  if (options.prompt_text.empty()) options.prompt_text = render_prompt(options.variant).text;
  if (options.target_unique == 0) throw ConfigError("target_unique must be positive");
  if (options.max_in_flight == 0) options.max_in_flight = 1;
  if (options.corpus_path.empty()) throw ConfigError("collection needs a corpus path");

  CollectionRun run;
  run.run_id = options.run_id;
  run.started_at = utc_now();

  std::vector<PersonaRecord> records;
  std::unordered_set<AttributeValues, ValuesHash> seen;
  const bool existing = std::filesystem::exists(options.corpus_path);
  if (existing && !options.resume) {
    throw ConfigError("corpus file " + options.corpus_path + " exists; pass --resume to continue it");
  }
  if (existing) {
    Corpus previous = read_corpus_file(options.corpus_path, options.model_id);
    for (auto& record : previous.records) {
      seen.insert(record.raw);
      records.push_back(std::move(record));
    }
    run.resumed_from = records.size();
  }
  run.counters.unique_collected = records.size();

  std::ofstream corpus_out(options.corpus_path, existing ? std::ios::app : std::ios::trunc);
  if (!corpus_out) throw ConfigError("cannot write corpus file " + options.corpus_path);
  std::ofstream rejections_out;
  if (!options.rejections_path.empty()) {
    rejections_out.open(options.rejections_path, existing ? std::ios::app : std::ios::trunc);
  }

  auto target_reached = [&] { return records.size() >= options.target_unique; };
  bool failed = false;
  while (!target_reached() && !failed && run.counters.requests < options.max_attempts) {
    const std::size_t wave = std::min(options.max_in_flight, options.max_attempts - run.counters.requests);
    std::vector<std::future<std::string>> pending;
    for (std::size_t i = 0; i < wave; ++i) {
      pending.push_back(std::async(std::launch::async,
                                   [&provider, &options] { return provider.complete(options.prompt_text); }));
    }
    run.counters.requests += wave;

    // Batches are consumed in issue order by this single writer.
    for (std::size_t i = 0; i < pending.size(); ++i) {
      std::string text;
      try {
        text = pending[i].get();
      } catch (const ProviderError& e) {
        if (!failed) {
          failed = true;
          run.status = CollectionStatus::kProviderFailed;
          run.error = e.what();
        }
        continue;
      }
      if (failed || target_reached()) continue;

      const std::size_t batch = run.counters.requests - wave + i;
      ParseResult parsed;
      try {
        parsed = parse_generation_payload({options.model_id, options.run_id, text});
      } catch (const NoParsableArray&) {
        ++run.counters.parse_failures;
        continue;
      }
      run.counters.rejected_records += parsed.rejections.size();
      if (rejections_out) {
        for (auto& rejection : parsed.rejections) {
          rejection.run_id = options.run_id + "#" + std::to_string(batch);
          write_rejection_line(rejections_out, rejection);
        }
      }
      for (auto& record : parsed.records) {
        if (target_reached()) break;
        if (!seen.insert(record.raw).second) {
          ++run.counters.duplicates_discarded;
          continue;
        }
        write_corpus_line(corpus_out, record);
        records.push_back(std::move(record));
      }
      corpus_out.flush();
      if (rejections_out) rejections_out.flush();
      run.counters.unique_collected = records.size();
      run.finished_at = utc_now();
      write_manifest(options, run);
    }
  }

  if (!failed) {
    run.status = target_reached() ? CollectionStatus::kCompleted : CollectionStatus::kBudgetExhausted;
    if (!target_reached()) {
      run.error = "attempt budget of " + std::to_string(options.max_attempts) + " requests exhausted at " +
                  std::to_string(records.size()) + " unique personas";
    }
  }
  run.counters.unique_collected = records.size();
  run.finished_at = utc_now();
  write_manifest(options, run);
  run.corpus = make_corpus(options.model_id, std::move(records));
  run.corpus.stats.rejected_count = run.counters.rejected_records;
  return run;
}

}  // namespace pba
