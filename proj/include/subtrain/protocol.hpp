#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "subtrain/data.hpp"
#include "subtrain/network.hpp"
#include "subtrain/optim.hpp"

namespace subtrain {

struct OptimizerConfig {
    enum class Kind { sgd, adam, cg };
    Kind kind = Kind::adam;
    AdamConfig adam;
    ScheduleSpec schedule; // sgd step sizes
    CGOptions cg;

    std::string name() const;
};

// Everything one grid execution depends on. `model.master_seed` is the
// shared initialization seed: every run of the grid starts from the same
// Glorot draw.
struct ExperimentConfig {
    NetworkSpec model;
    OptimizerConfig optimizer;
    std::vector<std::size_t> b_values = {2, 4, 8, 16, 32, 64, 128};
    std::size_t epochs_pre = 1000;
    std::size_t epochs_ft = 100;
    std::size_t batch_size = 0; // 0 = full subset (one exact gradient per epoch)
    std::size_t max_runs = 5;
    std::uint64_t seed = 1; // protocol.seed; partitions and shuffles derive from it
    std::size_t jobs = 1;
    std::string output_dir = "out";
    std::string dataset_tag = "synth";

    void validate() const;

    // Deterministic key=value rendering of every field; its FNV-1a hash is
    // the config hash recorded in the manifest.
    std::string canonical() const;
    std::uint64_t config_hash() const;
};

// The five loss characteristics of one (b, subset) run plus accuracies,
// the per-epoch training-loss trace, and the work counter.
struct MetricsRecord {
    std::size_t b = 1;
    std::size_t subset_id = 0;
    bool failed = false;
    double subset_loss_pre = 0;  // E_b: subset loss at the subset optimum
    double train_loss_pre = 0;   // E_BT: training-set loss at the subset optimum
    double val_loss_pre = 0;     // E_BV
    double train_loss_ft = 0;    // E_T: training-set loss after fine-tuning
    double val_loss_ft = 0;      // E_V
    double subset_acc_pre = 0;
    double train_acc_pre = 0;
    double val_acc_pre = 0;
    double train_acc_ft = 0;
    double val_acc_ft = 0;
    std::uint64_t sample_presentations = 0;
    std::vector<double> epoch_losses; // mean step loss per epoch, both phases
};

struct AggregatePoint {
    std::size_t b = 1;
    double fraction = 1.0; // 1/b
    std::size_t run_count = 0;
    std::size_t failed_count = 0;
    double subset_q = 0.0; // K*M/(P*b)
    double subset_loss_pre = 0, train_loss_pre = 0, val_loss_pre = 0;
    double train_loss_ft = 0, val_loss_ft = 0;
    double subset_acc_pre = 0, train_acc_pre = 0, val_acc_pre = 0;
    double train_acc_ft = 0, val_acc_ft = 0;
};

struct AggregateCurve {
    std::vector<AggregatePoint> points; // ascending b
    double q_full = 0.0;                // K*M/P
    double q_unity = 0.0;               // P/(K*M)
};

struct GridResult {
    std::vector<MetricsRecord> records; // sorted by (b, subset_id)
    AggregateCurve curve;
};

// Q = K*M/P: fitting constraints per trainable parameter.
double overdetermination_ratio(std::size_t examples, std::size_t outputs,
                               std::size_t parameters);

// The subset fraction at which the subset's Q crosses unity: P/(K*M).
double q_unity_fraction(std::size_t examples, std::size_t outputs, std::size_t parameters);

// Percent of baseline work under the sample-presentation cost model:
// 100 * (epochs_pre*K/b + epochs_ft*K) / ((epochs_pre + epochs_ft)*K).
double relative_cost(std::size_t b, std::size_t epochs_pre, std::size_t epochs_ft,
                     std::size_t examples);

// Phase 1: epochs_pre passes over the subset; record E_b/E_BT/E_BV.
// Phase 2: epochs_ft passes over the full set from the phase-1 parameters;
// record E_T/E_V. Divergence marks the record failed instead of throwing.
MetricsRecord run_subset_experiment(const ExperimentConfig& cfg, const Dataset& train,
                                    const Dataset& validation, const SubsetPlan& plan,
                                    std::size_t subset_id);

// Executes runs_selected subsets for every b plus the b=1 baseline,
// optionally across cfg.jobs worker threads, then aggregates per b.
GridResult run_full_grid(const ExperimentConfig& cfg, const Dataset& train,
                         const Dataset& validation);

AggregateCurve aggregate_records(const std::vector<MetricsRecord>& records,
                                 std::size_t examples, std::size_t outputs,
                                 std::size_t parameters);

struct ReportPaths {
    std::filesystem::path runs_csv;
    std::filesystem::path aggregate_csv;
    std::filesystem::path plotdata_dir;
    std::filesystem::path manifest;
};

// Writes runs.csv, aggregate.csv, plotdata/*.tsv, and manifest.json into
// out_dir. Byte-deterministic for a fixed (records, cfg) pair.
ReportPaths emit_report(const GridResult& result, const ExperimentConfig& cfg,
                        std::size_t examples, const std::filesystem::path& out_dir);

// Inverse of the runs.csv writer.
std::vector<MetricsRecord> parse_runs_csv(const std::filesystem::path& path);

} // namespace subtrain
