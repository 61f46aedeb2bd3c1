#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nff/eval.hpp"
#include "nff/trainer.hpp"

namespace nff {

/// Splits a sweep needs. Nested train/dev are only used for the
/// gold-supervision row.
struct SweepData {
    std::vector<AnnotatedSentence> train_flat;
    std::vector<AnnotatedSentence> dev_flat;
    std::vector<AnnotatedSentence> test;
    std::vector<AnnotatedSentence> train_nested;
    std::vector<AnnotatedSentence> dev_nested;
};

/// Reads train.flat.jsonl, dev.flat.jsonl, test.jsonl and, when present,
/// train.jsonl and dev.jsonl from a directory written by `nff synth`.
SweepData load_sweep_data(const std::string& dir);

struct MeanSd {
    double mean = 0.0;
    double sd = 0.0;  // sample standard deviation, 0 for a single value
};

MeanSd mean_sd(const std::vector<double>& values);

struct SweepCell {
    double gamma = 0.0;
    bool gold_supervision = false;
    std::uint64_t seed = 0;
    EvalReport report;
};

struct SweepRow {
    double gamma = 0.0;
    bool gold_supervision = false;
    std::size_t seeds = 0;
    MeanSd within_p, within_r, within_f1, out_f1, overall_f1;
    std::vector<SweepCell> cells;  // ordered by seed
};

struct SweepOptions {
    std::vector<double> gammas;
    std::size_t seeds = 1;  // seeds template.seed, template.seed + 1, ...
    bool include_gold = false;
    std::size_t jobs = 1;
};

/// Trains one model per (gamma, seed), evaluates on the nested test split
/// and aggregates over seeds. Cells may run in parallel; results are
/// assembled in (gamma, seed) order so the output does not depend on jobs.
std::vector<SweepRow> gamma_sweep(const SweepData& data, const SweepOptions& options, const TrainConfig& base);

/// One train + predict + evaluate run.
EvalReport run_cell(const SweepData& data, const TrainConfig& config);

inline constexpr const char* kSweepCsvHeader =
    "gamma,seed_count,within_p,within_p_sd,within_r,within_r_sd,within_f1,within_f1_sd,out_f1,out_f1_sd,"
    "overall_f1,overall_f1_sd";

/// Header plus one row per gamma, metrics with four decimals. The
/// gold-supervision row, if any, has gamma "gold".
std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace nff
