#include "nff/sweep.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "nff/corpus.hpp"

namespace nff {

SweepData load_sweep_data(const std::string& dir) {
    namespace fs = std::filesystem;
    const fs::path root(dir);
    auto load = [&](const char* name) { return load_sentences((root / name).string(), Format::Jsonl); };
    SweepData data;
    data.train_flat = load("train.flat.jsonl");
    data.dev_flat = load("dev.flat.jsonl");
    data.test = load("test.jsonl");
    if (fs::exists(root / "train.jsonl")) data.train_nested = load("train.jsonl");
    if (fs::exists(root / "dev.jsonl")) data.dev_nested = load("dev.jsonl");
    return data;
}

MeanSd mean_sd(const std::vector<double>& values) {
    MeanSd out;
    if (values.empty()) return out;
    for (double v : values) out.mean += v;
    out.mean /= static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - out.mean) * (v - out.mean);
        out.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return out;
}

EvalReport run_cell(const SweepData& data, const TrainConfig& config) {
    const auto& train_split = config.gold_supervision ? data.train_nested : data.train_flat;
    const auto& dev_split = config.gold_supervision ? data.dev_nested : data.dev_flat;
    if (train_split.empty()) {
        throw Error(config.gold_supervision ? "gold supervision needs the nested train split"
                                            : "sweep needs a non-empty flat train split");
    }
    const TrainResult trained = train(train_split, dev_split, config);
    const auto pred = predict(trained.model, data.test, config.max_span_len);
    return partitioned_eval(data.test, pred);
}

std::vector<SweepRow> gamma_sweep(const SweepData& data, const SweepOptions& options, const TrainConfig& base) {
    if (options.seeds == 0) throw Error("sweep needs at least one seed");
    if (options.gammas.empty() && !options.include_gold) throw Error("sweep needs at least one gamma");

    std::vector<SweepRow> rows;
    for (double gamma : options.gammas) {
        SweepRow row;
        row.gamma = gamma;
        rows.push_back(row);
    }
    if (options.include_gold) {
        SweepRow row;
        row.gold_supervision = true;
        rows.push_back(row);
    }

    std::vector<SweepCell> cells;
    for (const auto& row : rows) {
        for (std::size_t k = 0; k < options.seeds; ++k) {
            cells.push_back({row.gamma, row.gold_supervision, base.seed + k, {}});
        }
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            try {
                TrainConfig config = base;
                config.gamma = cells[i].gold_supervision ? 1.0 : cells[i].gamma;
                config.gold_supervision = cells[i].gold_supervision;
                config.seed = cells[i].seed;
                cells[i].report = run_cell(data, config);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = cells.size();
            }
        }
    };
    const std::size_t jobs = std::max<std::size_t>(1, std::min(options.jobs, cells.size()));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    for (std::size_t r = 0; r < rows.size(); ++r) {
        auto& row = rows[r];
        row.seeds = options.seeds;
        row.cells.assign(cells.begin() + static_cast<std::ptrdiff_t>(r * options.seeds),
                         cells.begin() + static_cast<std::ptrdiff_t>((r + 1) * options.seeds));
        std::vector<double> wp, wr, wf, of, af;
        for (const auto& cell : row.cells) {
            wp.push_back(cell.report.within.precision());
            wr.push_back(cell.report.within.recall());
            wf.push_back(cell.report.within.f1());
            of.push_back(cell.report.out.f1());
            af.push_back(cell.report.overall.f1());
        }
        row.within_p = mean_sd(wp);
        row.within_r = mean_sd(wr);
        row.within_f1 = mean_sd(wf);
        row.out_f1 = mean_sd(of);
        row.overall_f1 = mean_sd(af);
    }
    return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::string out = kSweepCsvHeader;
    out += '\n';
    for (const auto& row : rows) {
        const std::string gamma = row.gold_supervision ? "gold" : fmt::format("{}", row.gamma);
        out += fmt::format("{},{},{:.4f},{:.4f},{:.4f},{:.4f},{:.4f},{:.4f},{:.4f},{:.4f},{:.4f},{:.4f}\n", gamma,
                           row.seeds, row.within_p.mean, row.within_p.sd, row.within_r.mean, row.within_r.sd,
                           row.within_f1.mean, row.within_f1.sd, row.out_f1.mean, row.out_f1.sd,
                           row.overall_f1.mean, row.overall_f1.sd);
    }
    return out;
}

}  // namespace nff
