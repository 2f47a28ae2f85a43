#pragma once

#include <cstddef>
#include <string>

#include "pba/chat_client.hpp"
#include "pba/generation.hpp"

namespace pba {

struct CollectionCounters {
  std::size_t requests = 0;
  std::size_t parse_failures = 0;
  std::size_t rejected_records = 0;
  std::size_t duplicates_discarded = 0;
  std::size_t unique_collected = 0;
};

enum class CollectionStatus { kCompleted, kBudgetExhausted, kProviderFailed };

std::string_view status_key(CollectionStatus status);

struct CollectionOptions {
  std::string model_id;
  std::string run_id;
  PromptVariant variant = PromptVariant::kBaseline;
  std::string prompt_text;  // rendered prompt; filled from variant when empty
  std::size_t target_unique = 10000;
  std::size_t max_attempts = 2000;
  std::size_t max_in_flight = 1;
  double temperature = 1.0;
  std::string endpoint;  // recorded in the manifest only
  std::string corpus_path;
  std::string rejections_path;
  std::string manifest_path;
  // Continue from an existing corpus file instead of refusing to overwrite.
  bool resume = false;
};

struct CollectionRun {
  std::string run_id;
  CollectionStatus status = CollectionStatus::kCompleted;
  std::string error;
  CollectionCounters counters;
  std::size_t resumed_from = 0;
  std::string started_at;
  std::string finished_at;
  Corpus corpus;
};

// Requests batches until target_unique distinct personas are on disk or the
// attempt budget runs out. Corpus, rejection log and manifest are written
// after every batch, so interrupted runs can be resumed. Provider failures
// and budget exhaustion are reported through CollectionRun::status with the
// partial corpus intact.
CollectionRun collect_until_unique(CompletionProvider& provider, const CollectionOptions& options);

}  // namespace pba
