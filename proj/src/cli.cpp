#include "pba/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "pba/association.hpp"
#include "pba/chat_client.hpp"
#include "pba/collector.hpp"
#include "pba/corpus.hpp"
#include "pba/digest.hpp"
#include "pba/errors.hpp"
#include "pba/generation.hpp"
#include "pba/report.hpp"
#include "pba/robustness.hpp"
#include "pba/taxonomy.hpp"

namespace fs = std::filesystem;

namespace pba {

namespace {

struct GlobalOptions {
  std::string taxonomy = PBA_DEFAULT_TAXONOMY;
  std::string out = ".";
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string format = "json";
  std::size_t threads = 1;

  ReportFormat report_format() const {
    auto parsed = format_from_key(format);
    if (!parsed) throw ConfigError("unknown format " + format);
    return *parsed;
  }
};

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

std::string file_stem(const std::string& path) { return fs::path(path).stem().string(); }
std::string file_name(const std::string& path) { return fs::path(path).filename().string(); }

// Model ids become file names.
std::string safe_name(const std::string& id) {
  std::string out = id;
  for (char& c : out) {
    if (c == '/' || c == '\\' || c == ' ' || c == ':') c = '_';
  }
  return out.empty() ? "model" : out;
}

void write_text(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << content;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

InputDigest digest_of(const std::string& path) { return {file_name(path), sha256_file(path)}; }

Corpus load_corpus(const std::string& path) {
  Corpus corpus = read_corpus_file(path);
  if (corpus.model_id.empty()) corpus.model_id = file_stem(path);
  return corpus;
}

std::vector<std::string> read_name_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read name list " + path);
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    std::string name = normalize_text(line);
    if (!name.empty()) names.push_back(name);
  }
  if (names.empty()) throw ConfigError("name list " + path + " is empty");
  return names;
}

std::vector<std::string> pool_names(const std::vector<NameCount>& pool) {
  std::vector<std::string> names;
  for (const auto& entry : pool) names.push_back(entry.name);
  return names;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, ',')) {
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

// Shared name pool over every corpus of one invocation.
std::vector<NameCount> name_pool_for(const std::vector<const Corpus*>& corpora, std::size_t k, std::ostream& err) {
  if (corpora.empty()) return {};
  auto pool = top_k_names(corpora, k, NameShortfall::kAllowFewer);
  if (pool.size() < k) {
    err << "warning: only " << pool.size() << " distinct names available for a top-" << k << " pool\n";
  }
  return pool;
}

// Runs fn(i) for i in [0, count) on up to `threads` workers.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn fn) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::future<void>> workers;
  for (std::size_t w = 0; w < threads; ++w) {
    workers.push_back(std::async(std::launch::async, [=] {
      for (std::size_t i = w; i < count; i += threads) fn(i);
    }));
  }
  for (auto& worker : workers) worker.get();
}

// ---- generate -------------------------------------------------------------

struct GenerateOptions {
  std::string model;
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string variant = "baseline";
  std::string run_id;
  std::size_t target = 10000;
  std::size_t max_attempts = 2000;
  std::size_t concurrency = 4;
  std::string api_key_env = "OPENAI_API_KEY";
  double temperature = 1.0;
  bool unsafe_temperature = false;
  bool resume = false;
  std::string replay;
  double timeout_s = 120.0;
};

int cmd_generate(const GlobalOptions& global, const GenerateOptions& opt, Streams io) {
  auto variant = variant_from_key(opt.variant);
  if (!variant) throw ConfigError("unknown prompt variant " + opt.variant);

  GenerationConfig config;
  config.endpoint = opt.endpoint;
  config.model = opt.model;
  config.temperature = opt.temperature;
  config.unsafe_temperature = opt.unsafe_temperature;
  config.target_unique = opt.target;
  config.max_attempts = opt.max_attempts;
  config.max_in_flight = opt.concurrency;
  config.api_key_env = opt.api_key_env;
  config.timeout = std::chrono::milliseconds(static_cast<long long>(opt.timeout_s * 1000.0));
  config.validate();

  std::unique_ptr<CompletionProvider> provider;
  std::size_t in_flight = opt.concurrency;
  if (!opt.replay.empty()) {
    provider = ReplayProvider::from_file(opt.replay);
    in_flight = 1;  // replay order must follow request order
  } else {
    provider = std::make_unique<HttpChatProvider>(config);
  }

  const std::string stem = safe_name(opt.model) + (opt.variant == "baseline" ? "" : "-" + opt.variant);
  const fs::path dir(global.out);
  fs::create_directories(dir);

  CollectionOptions options;
  options.model_id = opt.model;
  options.run_id = opt.run_id.empty() ? stem : opt.run_id;
  options.variant = *variant;
  options.prompt_text = render_prompt(*variant).text;
  options.target_unique = opt.target;
  options.max_attempts = opt.max_attempts;
  options.max_in_flight = in_flight;
  options.temperature = opt.temperature;
  options.endpoint = opt.replay.empty() ? opt.endpoint : "replay:" + file_name(opt.replay);
  options.corpus_path = (dir / (stem + ".jsonl")).string();
  options.rejections_path = (dir / (stem + ".rejections.jsonl")).string();
  options.manifest_path = (dir / (stem + ".manifest.json")).string();
  options.resume = opt.resume;
  if (opt.resume && opt.run_id.empty() && fs::exists(options.manifest_path)) {
    auto manifest = nlohmann::json::parse(read_text(options.manifest_path), nullptr, false);
    if (manifest.is_object() && manifest.contains("run_id")) options.run_id = manifest["run_id"].get<std::string>();
  }

  CollectionRun run = collect_until_unique(*provider, options);
  const auto& c = run.counters;
  io.out << "requests " << c.requests << ", parse failures " << c.parse_failures << ", rejected " << c.rejected_records
         << ", duplicates " << c.duplicates_discarded << ", unique " << c.unique_collected << '\n';
  io.out << "corpus " << options.corpus_path << '\n';
  if (run.status != CollectionStatus::kCompleted) {
    io.err << status_key(run.status) << ": " << run.error << '\n';
    return 3;
  }
  return 0;
}

// ---- synth ----------------------------------------------------------------

struct SynthOptions {
  std::string spec;
  double lambda = 0.0;
  bool lambda_given = false;
  std::size_t n = 10000;
  std::string model_id;
};

int cmd_synth(const GlobalOptions& global, const SynthOptions& opt, Streams io) {
  SyntheticSpec spec = opt.spec.empty() ? default_synthetic_spec(opt.lambda, global.seed)
                                        : synthetic_spec_from_json(read_text(opt.spec));
  if (!opt.spec.empty()) {
    if (opt.lambda_given) spec.lambda = opt.lambda;
    if (global.seed_given) spec.seed = global.seed;
  }
  if (!opt.model_id.empty()) spec.model_id = opt.model_id;
  Corpus corpus = synthetic_generate(spec, opt.n);
  const fs::path path = fs::path(global.out) / (safe_name(spec.model_id) + ".jsonl");
  std::ostringstream buffer;
  write_corpus(buffer, corpus);
  write_text(path, buffer.str());
  io.out << corpus.records.size() << " records written to " << path.string() << '\n';
  return 0;
}

// ---- ingest ---------------------------------------------------------------

struct IngestOptions {
  std::string model;
  std::vector<std::string> payloads;
  bool jsonl = false;
};

int cmd_ingest(const GlobalOptions& global, const IngestOptions& opt, Streams io) {
  std::vector<std::pair<std::string, std::string>> payloads;  // (run id, text)
  for (const auto& path : opt.payloads) {
    if (!opt.jsonl) {
      payloads.emplace_back(file_stem(path), read_text(path));
      continue;
    }
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      auto object = nlohmann::json::parse(line, nullptr, false);
      if (!object.is_object() || !object.contains("text") || !object["text"].is_string()) {
        throw DataError(path + " line " + std::to_string(line_no) + " has no text field");
      }
      payloads.emplace_back(file_stem(path) + "#" + std::to_string(line_no), object["text"].get<std::string>());
    }
  }

  std::vector<PersonaRecord> records;
  std::vector<Rejection> rejections;
  std::size_t failures = 0;
  for (const auto& [run_id, text] : payloads) {
    try {
      ParseResult parsed = parse_generation_payload({opt.model, run_id, text});
      for (auto& record : parsed.records) records.push_back(std::move(record));
      for (auto& rejection : parsed.rejections) rejections.push_back(std::move(rejection));
    } catch (const NoParsableArray& e) {
      ++failures;
      io.err << "warning: " << run_id << ": " << e.what() << '\n';
    }
  }
  if (!payloads.empty() && failures == payloads.size()) throw NoParsableArray("no payload contained a persona array");

  Corpus corpus = make_corpus(opt.model, std::move(records), rejections.size());
  const fs::path dir(global.out);
  const std::string stem = safe_name(opt.model);
  std::ostringstream corpus_text;
  write_corpus(corpus_text, corpus);
  write_text(dir / (stem + ".jsonl"), corpus_text.str());
  std::ostringstream rejection_text;
  for (const auto& rejection : rejections) write_rejection_line(rejection_text, rejection);
  write_text(dir / (stem + ".rejections.jsonl"), rejection_text.str());

  const TaxonomyMap taxonomy = load_taxonomy(global.taxonomy);
  CanonicalizeResult canonical = canonicalize_corpus(corpus, taxonomy);
  std::ostringstream unmapped;
  write_unmapped_report(unmapped, canonical.unmapped);
  write_text(dir / (stem + ".unmapped.csv"), unmapped.str());

  const auto& s = corpus.stats;
  io.out << "payloads " << payloads.size() << ", unparsable " << failures << ", parsed " << s.parsed_count
         << ", rejected " << s.rejected_count << ", duplicates " << s.duplicate_count << ", unique " << s.unique_count
         << ", unmapped terms " << canonical.unmapped.size() << '\n';
  return 0;
}

// ---- audit ----------------------------------------------------------------

struct AuditCommandOptions {
  std::vector<std::string> corpora;
  std::size_t top_names = 50;
  std::size_t min_support = 30;
  std::string names_file;
  bool intersectional = false;
};

struct LoadedCorpus {
  std::string path;
  std::optional<Corpus> corpus;
  std::string error;
  int error_code = 0;
};

int error_code_of(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 1;
  if (dynamic_cast<const ProviderError*>(&e)) return 3;
  return 2;
}

std::vector<LoadedCorpus> load_canonical_corpora(const std::vector<std::string>& paths, const TaxonomyMap& taxonomy,
                                                 std::size_t threads) {
  std::vector<LoadedCorpus> loaded(paths.size());
  parallel_for(paths.size(), threads, [&](std::size_t i) {
    loaded[i].path = paths[i];
    try {
      loaded[i].corpus = canonicalize_corpus(load_corpus(paths[i]), taxonomy).corpus;
    } catch (const std::exception& e) {
      loaded[i].error = e.what();
      loaded[i].error_code = error_code_of(e);
    }
  });
  return loaded;
}

int cmd_audit(const GlobalOptions& global, const AuditCommandOptions& opt, Streams io) {
  const ReportFormat format = global.report_format();
  const TaxonomyMap taxonomy = load_taxonomy(global.taxonomy);
  auto loaded = load_canonical_corpora(opt.corpora, taxonomy, global.threads);

  std::vector<std::string> failures;
  int worst = 0;
  std::set<std::string> ids;
  std::vector<const Corpus*> usable;
  for (auto& item : loaded) {
    if (!item.corpus) {
      failures.push_back(file_name(item.path) + ": " + item.error);
      io.err << "error: " << item.path << ": " << item.error << '\n';
      worst = std::max(worst, item.error_code);
      continue;
    }
    if (!ids.insert(item.corpus->model_id).second) {
      throw ConfigError("model id " + item.corpus->model_id + " appears in more than one corpus");
    }
    usable.push_back(&*item.corpus);
  }

  std::vector<NameCount> pool;
  std::vector<std::string> names;
  if (!opt.names_file.empty()) {
    names = read_name_list(opt.names_file);
    for (const auto& name : names) pool.push_back({name, 0});
  } else {
    pool = name_pool_for(usable, opt.top_names, io.err);
    names = pool_names(pool);
  }

  Provenance shared;
  shared.inputs.push_back(digest_of(global.taxonomy));
  if (!opt.names_file.empty()) shared.inputs.push_back(digest_of(opt.names_file));
  shared.config = {{"command", "audit"},
                   {"top_names", opt.top_names},
                   {"min_support", opt.min_support},
                   {"name_pool", opt.names_file.empty() ? "corpora" : "file"},
                   {"intersectional", opt.intersectional}};

  std::vector<std::optional<AuditMatrix>> audits(usable.size());
  std::vector<std::vector<DimensionScore>> intersections(usable.size());
  std::vector<std::string> errors(usable.size());
  const AuditOptions audit_options{opt.min_support, 1};
  parallel_for(usable.size(), global.threads, [&](std::size_t i) {
    try {
      audits[i] = audit_model(*usable[i], names, audit_options);
      if (opt.intersectional) {
        intersections[i] = score_dimensions(*usable[i], intersectional_dimensions(), names, audit_options);
      }
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });

  const fs::path dir(global.out);
  std::vector<AuditMatrix> done;
  std::map<std::string, std::string> corpus_paths;
  for (const auto& item : loaded) {
    if (item.corpus) corpus_paths[item.corpus->model_id] = item.path;
  }
  for (std::size_t i = 0; i < usable.size(); ++i) {
    const std::string& id = usable[i]->model_id;
    if (!audits[i]) {
      failures.push_back(id + ": " + errors[i]);
      io.err << "error: " << id << ": " << errors[i] << '\n';
      worst = std::max(worst, 2);
      continue;
    }
    Provenance own = shared;
    own.inputs.push_back(digest_of(corpus_paths[id]));
    const std::string stem = "audit-" + safe_name(id);
    write_text(dir / (stem + ".json"), render_audit(*audits[i], own, ReportFormat::kJson, pool));
    if (format != ReportFormat::kJson) {
      write_text(dir / (stem + "." + std::string(format_extension(format))), render_audit(*audits[i], own, format, pool));
    }
    if (opt.intersectional) {
      AuditMatrix composite{id, intersections[i], mean_normalized(intersections[i])};
      write_text(dir / ("intersectional-" + safe_name(id) + ".json"), render_audit(composite, own, ReportFormat::kJson));
    }
    done.push_back(*audits[i]);
    io.out << id << ": mean " << format_fixed(audits[i]->mean_normalized, 3, "n/a") << " over "
           << audits[i]->scored_count() << " dimensions\n";
  }

  Provenance combined = shared;
  for (const auto& item : loaded) {
    if (fs::exists(item.path)) combined.inputs.push_back(digest_of(item.path));
  }
  write_text(dir / ("combined." + std::string(format_extension(format))),
             render_combined(done, pool, failures, combined, format));
  write_text(dir / "radar.csv", render_radar_csv(done, combined));
  return worst;
}

// ---- compare --------------------------------------------------------------

struct CompareOptions {
  std::vector<std::string> audits;
  double q = 0.05;
};

Provenance audit_inputs(const std::vector<std::string>& paths, Json config) {
  Provenance provenance;
  for (const auto& path : paths) provenance.inputs.push_back(digest_of(path));
  provenance.config = std::move(config);
  return provenance;
}

int cmd_compare(const GlobalOptions& global, const CompareOptions& opt, Streams io) {
  if (opt.audits.size() < 2) throw ConfigError("compare needs at least two audit files");
  std::vector<AuditMatrix> audits;
  for (const auto& path : opt.audits) audits.push_back(read_audit_file(path));
  SignificanceMatrix matrix = pairwise_model_significance(audits, opt.q);
  const ReportFormat format = global.report_format();
  const Provenance provenance = audit_inputs(opt.audits, {{"command", "compare"}, {"q", opt.q}});
  const fs::path path = fs::path(global.out) / ("significance." + std::string(format_extension(format)));
  write_text(path, render_significance(matrix, provenance, format));
  std::size_t significant = 0;
  for (const auto& cell : matrix.cells) significant += cell.significant ? 1 : 0;
  io.out << matrix.cells.size() << " pairs, " << significant << " significant at q=" << opt.q << "; "
         << path.string() << '\n';
  return 0;
}

// ---- robustness -----------------------------------------------------------

std::string resolve(const fs::path& base, const std::string& path) {
  fs::path p(path);
  return p.is_absolute() ? p.string() : (base / p).string();
}

Corpus subsample(const Corpus& corpus, std::size_t size, std::uint64_t seed) {
  if (size > corpus.records.size()) {
    throw DataError("cannot subsample " + std::to_string(size) + " records from " + corpus.model_id + " with " +
                    std::to_string(corpus.records.size()));
  }
  std::vector<std::size_t> index(corpus.records.size());
  for (std::size_t i = 0; i < index.size(); ++i) index[i] = i;
  // Partial Fisher-Yates with a portable draw so results do not depend on the
  // standard library's distribution implementations.
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < size; ++i) {
    const std::size_t span = index.size() - i;
    const std::size_t j = i + static_cast<std::size_t>((rng() >> 11) * 0x1.0p-53 * static_cast<double>(span));
    std::swap(index[i], index[std::min(j, index.size() - 1)]);
  }
  std::sort(index.begin(), index.begin() + static_cast<std::ptrdiff_t>(size));
  Corpus out;
  out.model_id = corpus.model_id;
  for (std::size_t i = 0; i < size; ++i) out.records.push_back(corpus.records[index[i]]);
  out.stats = corpus_stats(out);
  return out;
}

int cmd_robustness(const GlobalOptions& global, const std::string& config_path, Streams io) {
  const auto config = nlohmann::json::parse(read_text(config_path), nullptr, false);
  if (!config.is_object()) throw ConfigError("robustness config " + config_path + " is not a JSON object");
  const fs::path base = fs::path(config_path).parent_path();
  const std::string mode = config.value("mode", "conditions");
  const std::size_t top_names = config.value("top_names", std::size_t{50});
  const std::size_t min_support = config.value("min_support", std::size_t{30});

  std::vector<std::pair<std::string, std::vector<AuditMatrix>>> conditions;
  Provenance provenance;
  provenance.inputs.push_back(digest_of(config_path));

  if (mode == "conditions") {
    if (!config.contains("conditions") || !config["conditions"].is_array()) {
      throw ConfigError("MissingCondition: config lists no conditions");
    }
    for (const auto& condition : config["conditions"]) {
      const std::string id = condition.value("id", "");
      std::vector<AuditMatrix> audits;
      for (const auto& path : condition.value("audits", std::vector<std::string>{})) {
        const std::string full = resolve(base, path);
        audits.push_back(read_audit_file(full));
        provenance.inputs.push_back(digest_of(full));
      }
      conditions.emplace_back(id, std::move(audits));
    }
  } else if (mode == "sample-size") {
    const auto sizes = config.value("sizes", std::vector<std::size_t>{});
    const auto paths = config.value("corpora", std::vector<std::string>{});
    if (sizes.size() < 2) throw ConfigError("MissingCondition: sample-size mode needs at least two sizes");
    if (paths.empty()) throw ConfigError("sample-size mode needs corpora");
    const TaxonomyMap taxonomy = load_taxonomy(global.taxonomy);
    provenance.inputs.push_back(digest_of(global.taxonomy));
    std::vector<Corpus> corpora;
    for (const auto& path : paths) {
      const std::string full = resolve(base, path);
      corpora.push_back(canonicalize_corpus(load_corpus(full), taxonomy).corpus);
      provenance.inputs.push_back(digest_of(full));
    }
    for (std::size_t s = 0; s < sizes.size(); ++s) {
      std::vector<Corpus> samples(corpora.size());
      for (std::size_t m = 0; m < corpora.size(); ++m) {
        samples[m] = subsample(corpora[m], sizes[s], global.seed ^ (0x9e3779b97f4a7c15ULL * (s + 1) + m));
      }
      std::vector<const Corpus*> pointers;
      for (const auto& sample : samples) pointers.push_back(&sample);
      const auto names = pool_names(name_pool_for(pointers, top_names, io.err));
      std::vector<AuditMatrix> audits(samples.size());
      parallel_for(samples.size(), global.threads,
                   [&](std::size_t m) { audits[m] = audit_model(samples[m], names, {min_support, 1}); });
      conditions.emplace_back("n=" + std::to_string(sizes[s]), std::move(audits));
    }
  } else {
    throw ConfigError("unknown robustness mode " + mode);
  }

  provenance.config = {{"command", "robustness"}, {"mode", mode}, {"seed", global.seed}};
  const auto panels = build_panels(conditions);
  std::vector<AgreementReport> reports;
  for (const auto& panel : panels) reports.push_back(agreement_report(panel));
  const ReportFormat format = global.report_format();
  const fs::path path = fs::path(global.out) / ("agreement." + std::string(format_extension(format)));
  write_text(path, render_agreement(reports, provenance, format));
  io.out << reports.size() << " dimensions, " << conditions.size() << " conditions; " << path.string() << '\n';
  return 0;
}

// ---- report ---------------------------------------------------------------

struct ReportOptions {
  std::vector<std::string> audits;
  std::string lineage;
  std::vector<std::string> corpora;
  std::string dimension = "gender:occupation";
  std::size_t top_k = 10;
  std::size_t top_names = 50;
  std::size_t min_support = 30;
  std::string drill;      // attribute=category
  std::string drill_raw;  // attribute=raw term
  std::string drill_by = "gender";
  std::string gap = "female,male";
};

std::pair<Attribute, std::string> parse_assignment(const std::string& text, const char* flag) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw ConfigError(std::string(flag) + " expects attribute=value");
  auto attribute = attribute_from_key(text.substr(0, eq));
  if (!attribute) throw ConfigError("unknown attribute " + text.substr(0, eq));
  return {*attribute, normalize_text(text.substr(eq + 1))};
}

int cmd_report(const GlobalOptions& global, const ReportOptions& opt, Streams io) {
  const ReportFormat format = global.report_format();
  const fs::path dir(global.out);
  int status = 0;

  if (!opt.audits.empty()) {
    std::vector<AuditMatrix> audits;
    for (const auto& path : opt.audits) audits.push_back(read_audit_file(path));
    std::vector<std::string> order = split_list(opt.lineage);
    if (order.empty()) {
      for (const auto& audit : audits) order.push_back(audit.model_id);
    }
    const TrajectoryView view = build_trajectory(audits, order);
    const Provenance provenance =
        audit_inputs(opt.audits, {{"command", "report"}, {"lineage", order}});
    write_text(dir / ("trajectory." + std::string(format_extension(format))),
               render_trajectory(view, provenance, format));
    io.out << "trajectory over " << order.size() << " models\n";
  }

  if (opt.corpora.empty()) return status;

  const BiasDimension dimension = BiasDimension::from_key(opt.dimension);
  const TaxonomyMap taxonomy = load_taxonomy(global.taxonomy);
  auto loaded = load_canonical_corpora(opt.corpora, taxonomy, global.threads);
  std::vector<const Corpus*> usable;
  for (const auto& item : loaded) {
    if (!item.corpus) {
      io.err << "error: " << item.path << ": " << item.error << '\n';
      status = std::max(status, item.error_code);
    } else {
      usable.push_back(&*item.corpus);
    }
  }
  std::vector<std::string> names;
  if (dimension.identity.involves(Attribute::kName)) names = pool_names(name_pool_for(usable, opt.top_names, io.err));
  const auto groups = split_list(opt.gap);

  std::vector<GapRow> gaps;
  for (const auto& item : loaded) {
    if (!item.corpus) continue;
    const Corpus& corpus = *item.corpus;
    const std::string stem = safe_name(corpus.model_id);
    Provenance provenance;
    provenance.inputs = {digest_of(global.taxonomy), digest_of(item.path)};
    provenance.config = {{"command", "report"}, {"dimension", dimension.key()}, {"top_k", opt.top_k},
                         {"min_support", opt.min_support}};
    try {
      const ContingencyTable table = build_contingency(corpus, dimension, {&names, opt.min_support});
      write_text(dir / ("heatmap-" + stem + ".csv"), render_heatmap_csv(table, provenance));
      write_text(dir / ("topk-" + stem + ".csv"), render_top_k_csv(top_k_conditional(table, opt.top_k), provenance));
      if (groups.size() == 2) {
        gaps.push_back({corpus.model_id, dimension.key(), groups[0], groups[1], l1_gap(table, groups[0], groups[1])});
      }
      if (!opt.drill.empty()) {
        const auto [attribute, category] = parse_assignment(opt.drill, "--drill");
        write_text(dir / ("drilldown-" + stem + ".csv"),
                   render_drill_down_csv(drill_down(corpus, attribute, category), provenance));
      }
      if (!opt.drill_raw.empty()) {
        const auto [attribute, term] = parse_assignment(opt.drill_raw, "--drill-raw");
        auto by = attribute_from_key(opt.drill_by);
        if (!by) throw ConfigError("unknown attribute " + opt.drill_by);
        const auto shares = conditional_distribution(corpus, *by, {attribute, term, true});
        write_text(dir / ("distribution-" + stem + ".csv"), render_distribution_csv(shares, provenance));
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const DataError& e) {
      io.err << "error: " << corpus.model_id << ": " << e.what() << '\n';
      status = std::max(status, 2);
    }
  }
  if (!gaps.empty()) {
    Provenance provenance;
    provenance.inputs.push_back(digest_of(global.taxonomy));
    for (const auto& item : loaded) {
      if (item.corpus) provenance.inputs.push_back(digest_of(item.path));
    }
    provenance.config = {{"command", "report"}, {"dimension", dimension.key()}, {"groups", groups}};
    write_text(dir / "gaps.csv", render_gap_csv(gaps, provenance));
  }
  io.out << "reports for " << usable.size() << " corpora in " << dir.string() << '\n';
  return status;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Persona bias audit: collect persona corpora and measure attribute associations", "pba"};
  app.require_subcommand(1);
  app.set_version_flag("--version", PBA_VERSION);

  GlobalOptions global;
  app.add_option("--taxonomy", global.taxonomy, "Taxonomy JSON")->capture_default_str();
  app.add_option("--out", global.out, "Output directory")->capture_default_str();
  auto* seed = app.add_option("--seed", global.seed, "Random seed")->capture_default_str();
  app.add_option("--format", global.format, "Report format")
      ->check(CLI::IsMember({"json", "csv", "md"}))
      ->capture_default_str();
  app.add_option("--threads", global.threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();

  GenerateOptions gen;
  auto* generate = app.add_subcommand("generate", "Collect a persona corpus from a chat-completions endpoint");
  generate->add_option("--model", gen.model, "Model name")->required();
  generate->add_option("--endpoint", gen.endpoint, "Chat-completions URL")->capture_default_str();
  generate->add_option("--variant", gen.variant, "Prompt variant")
      ->check(CLI::IsMember({"baseline", "role_play", "debias"}))
      ->capture_default_str();
  generate->add_option("--run-id", gen.run_id, "Run id recorded in the corpus");
  generate->add_option("--target", gen.target, "Unique personas to collect")->capture_default_str();
  generate->add_option("--max-attempts", gen.max_attempts, "Request budget")->capture_default_str();
  generate->add_option("--concurrency", gen.concurrency, "Requests in flight")->capture_default_str();
  generate->add_option("--api-key-env", gen.api_key_env, "Environment variable holding the API key")
      ->capture_default_str();
  generate->add_option("--temperature", gen.temperature, "Sampling temperature")->capture_default_str();
  generate->add_flag("--unsafe-temperature", gen.unsafe_temperature, "Allow a temperature other than 1");
  generate->add_option("--timeout", gen.timeout_s, "Request timeout in seconds")->capture_default_str();
  generate->add_flag("--resume", gen.resume, "Continue an existing corpus");
  generate->add_option("--replay", gen.replay, "Serve recorded payloads from a JSONL file instead of HTTP");

  SynthOptions syn;
  auto* synth = app.add_subcommand("synth", "Write a seeded synthetic corpus");
  synth->add_option("--spec", syn.spec, "Synthetic spec JSON (default spec when omitted)");
  auto* lambda = synth->add_option("--lambda", syn.lambda, "Association strength in [0, 1]")->capture_default_str();
  synth->add_option("-n,--n", syn.n, "Records")->capture_default_str();
  synth->add_option("--model-id", syn.model_id, "Model id of the corpus");

  IngestOptions ing;
  auto* ingest = app.add_subcommand("ingest", "Parse raw model responses into a corpus");
  ingest->add_option("--model", ing.model, "Model id")->required();
  ingest->add_option("payloads", ing.payloads, "Response files")->required()->check(CLI::ExistingFile);
  ingest->add_flag("--jsonl", ing.jsonl, "Inputs are JSONL files of {\"text\": ...} objects");

  AuditCommandOptions aud;
  auto* audit = app.add_subcommand("audit", "Score the 16 bias dimensions of each corpus");
  audit->add_option("corpora", aud.corpora, "Corpus JSONL files")->required();
  audit->add_option("--top-names", aud.top_names, "Size of the shared name pool")->capture_default_str();
  audit->add_option("--min-support", aud.min_support, "Minimum records per intersectional category")
      ->capture_default_str();
  audit->add_option("--names", aud.names_file, "Explicit name pool, one per line")->check(CLI::ExistingFile);
  audit->add_flag("--intersectional", aud.intersectional, "Also score composite identity axes");

  CompareOptions cmp;
  auto* compare = app.add_subcommand("compare", "Pairwise model significance from audit files");
  compare->add_option("audits", cmp.audits, "Audit JSON files")->required()->check(CLI::ExistingFile);
  compare->add_option("--q", cmp.q, "FDR level")->capture_default_str();

  std::string robustness_config;
  auto* robustness = app.add_subcommand("robustness", "Agreement statistics across conditions");
  robustness->add_option("--config", robustness_config, "Panels config JSON")->required()->check(CLI::ExistingFile);

  ReportOptions rep;
  auto* report = app.add_subcommand("report", "Trajectories, heatmaps, drill-downs and L1 gaps");
  report->add_option("--audits", rep.audits, "Audit JSON files")->check(CLI::ExistingFile);
  report->add_option("--lineage", rep.lineage, "Comma-separated model order");
  report->add_option("--corpus", rep.corpora, "Corpus JSONL files for heatmaps and drill-downs");
  report->add_option("--dimension", rep.dimension, "Dimension key")->capture_default_str();
  report->add_option("--top-k", rep.top_k, "Categories per identity in the heatmap")->capture_default_str();
  report->add_option("--top-names", rep.top_names, "Name pool size for name dimensions")->capture_default_str();
  report->add_option("--min-support", rep.min_support, "Minimum records per intersectional category")
      ->capture_default_str();
  report->add_option("--drill", rep.drill, "attribute=category drill-down into raw terms");
  report->add_option("--drill-raw", rep.drill_raw, "attribute=raw term conditional distribution");
  report->add_option("--drill-by", rep.drill_by, "Attribute distributed by --drill-raw")->capture_default_str();
  report->add_option("--gap", rep.gap, "Two identity groups for the L1 gap")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << PBA_VERSION << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return 1;
  }
  global.seed_given = seed->count() > 0;
  syn.lambda_given = lambda->count() > 0;

  Streams io{out, err};
  try {
    if (*generate) return cmd_generate(global, gen, io);
    if (*synth) return cmd_synth(global, syn, io);
    if (*ingest) return cmd_ingest(global, ing, io);
    if (*audit) return cmd_audit(global, aud, io);
    if (*compare) return cmd_compare(global, cmp, io);
    if (*robustness) return cmd_robustness(global, robustness_config, io);
    if (*report) return cmd_report(global, rep, io);
  } catch (const ProviderError& e) {
    err << "provider error: " << e.what() << '\n';
    return 3;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return 2;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const nlohmann::json::exception& e) {
    err << "data error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace pba
