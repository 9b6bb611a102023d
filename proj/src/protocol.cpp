#include "subtrain/protocol.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "subtrain/errors.hpp"
#include "subtrain/rng.hpp"

namespace subtrain {

std::string OptimizerConfig::name() const {
    switch (kind) {
        case Kind::sgd: return "sgd";
        case Kind::adam: return "adam";
        case Kind::cg: return "cg";
    }
    return "?";
}

void ExperimentConfig::validate() const {
    model.validate();
    if (b_values.empty()) throw ConfigError("protocol.b_values must be nonempty");
    for (std::size_t b : b_values)
        if (std::find(kAllowedDivisors.begin(), kAllowedDivisors.end(), b) ==
            kAllowedDivisors.end())
            throw ConfigError("protocol.b_values entries must come from {1,2,4,8,16,32,64,128}");
    if (max_runs == 0) throw ConfigError("protocol.max_runs must be positive");
    if (optimizer.kind == OptimizerConfig::Kind::sgd && optimizer.schedule.a <= 0.0)
        throw ConfigError("optimizer.schedule.a must be positive");
}

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

std::string ExperimentConfig::canonical() const {
    std::map<std::string, std::string> kv;
    kv["dataset.tag"] = dataset_tag;
    kv["model.input"] = std::to_string(model.input_height) + "x" +
                        std::to_string(model.input_width) + "x" +
                        std::to_string(model.input_channels);
    std::string filters;
    for (std::size_t i = 0; i < model.conv_filters.size(); ++i)
        filters += (i ? "/" : "") + std::to_string(model.conv_filters[i]);
    kv["model.conv_filters"] = filters;
    kv["model.hidden_units"] = std::to_string(model.hidden_units);
    kv["model.class_count"] = std::to_string(model.class_count);
    kv["model.seed"] = std::to_string(model.master_seed);
    kv["optimizer.kind"] = optimizer.name();
    kv["optimizer.adam.c"] = fmt(optimizer.adam.c);
    kv["optimizer.adam.beta1"] = fmt(optimizer.adam.beta1);
    kv["optimizer.adam.beta2"] = fmt(optimizer.adam.beta2);
    kv["optimizer.adam.epsilon"] = fmt(optimizer.adam.epsilon);
    kv["optimizer.schedule.family"] =
        optimizer.schedule.family == ScheduleSpec::Family::constant ? "constant" : "power";
    kv["optimizer.schedule.a"] = fmt(optimizer.schedule.a);
    kv["optimizer.schedule.p"] = fmt(optimizer.schedule.p);
    kv["optimizer.cg.beta"] =
        optimizer.cg.beta_rule == CGOptions::BetaRule::polak_ribiere ? "pr" : "fr";
    kv["optimizer.cg.line_search"] =
        optimizer.cg.line_search == CGOptions::LineSearchMode::backtracking ? "backtracking"
                                                                            : "exact";
    std::string bs;
    for (std::size_t i = 0; i < b_values.size(); ++i)
        bs += (i ? "," : "") + std::to_string(b_values[i]);
    kv["protocol.b_values"] = bs;
    kv["protocol.epochs_pre"] = std::to_string(epochs_pre);
    kv["protocol.epochs_ft"] = std::to_string(epochs_ft);
    kv["protocol.batch_size"] = std::to_string(batch_size);
    kv["protocol.max_runs"] = std::to_string(max_runs);
    kv["protocol.seed"] = std::to_string(seed);
    // jobs and output_dir are execution details; they must not change results.
    std::string out;
    for (const auto& [key, value] : kv) out += key + "=" + value + "\n";
    return out;
}

std::uint64_t ExperimentConfig::config_hash() const { return fnv1a64(canonical()); }

double overdetermination_ratio(std::size_t examples, std::size_t outputs,
                               std::size_t parameters) {
    if (examples == 0 || outputs == 0) throw ConfigError("Q needs positive K and M");
    if (parameters == 0) throw ConfigError("Q undefined for zero parameters");
    return static_cast<double>(examples) * static_cast<double>(outputs) /
           static_cast<double>(parameters);
}

double q_unity_fraction(std::size_t examples, std::size_t outputs, std::size_t parameters) {
    if (examples == 0 || outputs == 0 || parameters == 0)
        throw ConfigError("q_unity_fraction needs positive inputs");
    return static_cast<double>(parameters) /
           (static_cast<double>(examples) * static_cast<double>(outputs));
}

double relative_cost(std::size_t b, std::size_t epochs_pre, std::size_t epochs_ft,
                     std::size_t examples) {
    if (b == 0 || examples == 0) throw ConfigError("relative_cost needs positive inputs");
    double k = static_cast<double>(examples);
    double cost_b = static_cast<double>(epochs_pre) * (k / static_cast<double>(b)) +
                    static_cast<double>(epochs_ft) * k;
    double cost_baseline =
        static_cast<double>(epochs_pre) * k + static_cast<double>(epochs_ft) * k;
    return 100.0 * cost_b / cost_baseline;
}

namespace {

// Optimizer state for one training run; exactly one member is active.
struct RunOptimizer {
    OptimizerConfig cfg;
    AdamState adam;
    CGState cg;
    std::uint64_t sgd_t = 0;

    explicit RunOptimizer(const OptimizerConfig& c, std::size_t dimension)
        : cfg(c), adam(dimension), cg(dimension) {}
};

Batch gather_batch(const Dataset& ds, const std::vector<std::size_t>& indices) {
    return Batch{ds.gather_images(indices), ds.gather_labels(indices)};
}

// One pass over `indices` with SGD or Adam. Returns the mean step loss.
double epoch_sgd_adam(Network& net, const Dataset& train,
                      const std::vector<std::size_t>& indices, std::size_t batch_size,
                      RunOptimizer& opt, SeededRng epoch_rng, const Batch* full_batch) {
    double loss_sum = 0.0;
    std::size_t steps = 0;
    auto step = [&](const Batch& batch) {
        auto lg = net.loss_and_gradient(batch);
        if (opt.cfg.kind == OptimizerConfig::Kind::adam) {
            adam_step(net.parameters(), lg.gradient, opt.adam, opt.cfg.adam);
        } else {
            opt.sgd_t += 1;
            sgd_step(net.parameters(), lg.gradient, opt.cfg.schedule.step_size(opt.sgd_t));
        }
        loss_sum += lg.loss;
        ++steps;
    };
    if (full_batch) {
        step(*full_batch);
    } else {
        std::vector<std::size_t> order = indices;
        for (std::size_t i = order.size() - 1; i > 0; --i)
            std::swap(order[i], order[epoch_rng.next_below(i + 1)]);
        for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
            std::size_t end = std::min(begin + batch_size, order.size());
            std::vector<std::size_t> part(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                          order.begin() + static_cast<std::ptrdiff_t>(end));
            step(gather_batch(train, part));
        }
    }
    return loss_sum / static_cast<double>(steps);
}

// Trains `net` on train[indices] for `epochs` passes, appending one trace
// entry per epoch and counting indices.size() presentations per epoch.
void run_phase(Network& net, const Dataset& train, const std::vector<std::size_t>& indices,
               std::size_t epochs, const ExperimentConfig& cfg, RunOptimizer& opt,
               std::uint64_t phase_seed, MetricsRecord& record) {
    if (epochs == 0) return;
    bool minibatch = cfg.batch_size > 0 && cfg.batch_size < indices.size() &&
                     cfg.optimizer.kind != OptimizerConfig::Kind::cg;
    Batch full_batch;
    if (!minibatch) full_batch = gather_batch(train, indices);

    if (cfg.optimizer.kind == OptimizerConfig::Kind::cg) {
        // CG needs exact losses, so it always sees the whole index set.
        Objective objective{
            [&](const std::vector<double>& w) {
                net.parameters() = w;
                return net.mean_loss(full_batch);
            },
            [&](const std::vector<double>& w) {
                net.parameters() = w;
                auto lg = net.loss_and_gradient(full_batch);
                return std::make_pair(lg.loss, std::move(lg.gradient));
            }};
        std::vector<double> params = net.parameters();
        for (std::size_t e = 0; e < epochs; ++e) {
            auto res = cg_step(objective, opt.cg, params, opt.cfg.cg);
            net.parameters() = params;
            record.epoch_losses.push_back(res.loss);
            record.sample_presentations += indices.size();
        }
        return;
    }

    for (std::size_t e = 0; e < epochs; ++e) {
        SeededRng epoch_rng(SeededRng::derive_child(phase_seed, e));
        double mean_loss = epoch_sgd_adam(net, train, indices, cfg.batch_size, opt,
                                          epoch_rng, minibatch ? nullptr : &full_batch);
        if (!std::isfinite(mean_loss)) throw NumericError("training loss diverged");
        record.epoch_losses.push_back(mean_loss);
        record.sample_presentations += indices.size();
    }
}

} // namespace

MetricsRecord run_subset_experiment(const ExperimentConfig& cfg, const Dataset& train,
                                    const Dataset& validation, const SubsetPlan& plan,
                                    std::size_t subset_id) {
    if (subset_id >= plan.subset_indices.size())
        throw ConfigError("subset id outside the plan");
    const std::vector<std::size_t>& subset = plan.subset_indices[subset_id];

    MetricsRecord record;
    record.b = plan.divisor;
    record.subset_id = subset_id;

    Network net(cfg.model); // identical starting point for every run
    RunOptimizer opt(cfg.optimizer, net.parameter_count());

    std::uint64_t run_seed = SeededRng::derive_child(
        SeededRng::derive_child(SeededRng::derive_child(cfg.seed, "run"), plan.divisor),
        subset_id);

    try {
        run_phase(net, train, subset, cfg.epochs_pre, cfg, opt,
                  SeededRng::derive_child(run_seed, "pre"), record);

        auto subset_eval = net.evaluate(train, subset);
        record.subset_loss_pre = subset_eval.loss;
        record.subset_acc_pre = subset_eval.accuracy;
        if (plan.divisor == 1) { // the subset is the training set
            record.train_loss_pre = subset_eval.loss;
            record.train_acc_pre = subset_eval.accuracy;
        } else {
            auto train_eval = net.evaluate(train);
            record.train_loss_pre = train_eval.loss;
            record.train_acc_pre = train_eval.accuracy;
        }
        auto val_eval = net.evaluate(validation);
        record.val_loss_pre = val_eval.loss;
        record.val_acc_pre = val_eval.accuracy;

        if (cfg.epochs_ft == 0) {
            record.train_loss_ft = record.train_loss_pre;
            record.train_acc_ft = record.train_acc_pre;
            record.val_loss_ft = record.val_loss_pre;
            record.val_acc_ft = record.val_acc_pre;
        } else {
            std::vector<std::size_t> all(train.size());
            std::iota(all.begin(), all.end(), std::size_t{0});
            RunOptimizer ft_opt(cfg.optimizer, net.parameter_count()); // fresh state
            run_phase(net, train, all, cfg.epochs_ft, cfg, ft_opt,
                      SeededRng::derive_child(run_seed, "ft"), record);
            auto train_ft = net.evaluate(train);
            record.train_loss_ft = train_ft.loss;
            record.train_acc_ft = train_ft.accuracy;
            auto val_ft = net.evaluate(validation);
            record.val_loss_ft = val_ft.loss;
            record.val_acc_ft = val_ft.accuracy;
        }
    } catch (const NumericError&) {
        record.failed = true;
    }
    return record;
}

GridResult run_full_grid(const ExperimentConfig& cfg, const Dataset& train,
                         const Dataset& validation) {
    cfg.validate();
    train.validate();
    validation.validate();
    if (train.class_count != cfg.model.class_count)
        throw ConfigError("model class_count does not match the dataset");

    std::vector<std::size_t> divisors = cfg.b_values;
    if (std::find(divisors.begin(), divisors.end(), std::size_t{1}) == divisors.end())
        divisors.push_back(1); // the baseline always runs
    std::sort(divisors.begin(), divisors.end());
    divisors.erase(std::unique(divisors.begin(), divisors.end()), divisors.end());

    std::uint64_t partition_seed = SeededRng::derive_child(cfg.seed, "partition");
    struct Task {
        const SubsetPlan* plan;
        std::size_t subset_id;
    };
    std::vector<SubsetPlan> plans;
    plans.reserve(divisors.size());
    for (std::size_t b : divisors)
        plans.push_back(partition_subsets(train.size(), b,
                                          SeededRng::derive_child(partition_seed, b),
                                          cfg.max_runs));
    std::vector<Task> tasks;
    for (const SubsetPlan& plan : plans)
        for (std::size_t id : plan.runs_selected) tasks.push_back({&plan, id});

    std::vector<MetricsRecord> records(tasks.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            try {
                records[i] = run_subset_experiment(cfg, train, validation, *tasks[i].plan,
                                                   tasks[i].subset_id);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::size_t workers = std::max<std::size_t>(1, std::min(cfg.jobs, tasks.size()));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    std::sort(records.begin(), records.end(), [](const MetricsRecord& a, const MetricsRecord& b) {
        return a.b != b.b ? a.b < b.b : a.subset_id < b.subset_id;
    });

    GridResult result;
    result.records = std::move(records);
    result.curve = aggregate_records(result.records, train.size(), cfg.model.class_count,
                                     parameter_count(cfg.model));
    return result;
}

AggregateCurve aggregate_records(const std::vector<MetricsRecord>& records,
                                 std::size_t examples, std::size_t outputs,
                                 std::size_t parameters) {
    AggregateCurve curve;
    curve.q_full = overdetermination_ratio(examples, outputs, parameters);
    curve.q_unity = q_unity_fraction(examples, outputs, parameters);

    std::vector<std::size_t> divisors;
    for (const MetricsRecord& r : records)
        if (std::find(divisors.begin(), divisors.end(), r.b) == divisors.end())
            divisors.push_back(r.b);
    std::sort(divisors.begin(), divisors.end());

    for (std::size_t b : divisors) {
        AggregatePoint point;
        point.b = b;
        point.fraction = 1.0 / static_cast<double>(b);
        point.subset_q = curve.q_full / static_cast<double>(b);
        double n = 0;
        for (const MetricsRecord& r : records) {
            if (r.b != b) continue;
            point.run_count += 1;
            if (r.failed) {
                point.failed_count += 1;
                continue;
            }
            n += 1;
            point.subset_loss_pre += r.subset_loss_pre;
            point.train_loss_pre += r.train_loss_pre;
            point.val_loss_pre += r.val_loss_pre;
            point.train_loss_ft += r.train_loss_ft;
            point.val_loss_ft += r.val_loss_ft;
            point.subset_acc_pre += r.subset_acc_pre;
            point.train_acc_pre += r.train_acc_pre;
            point.val_acc_pre += r.val_acc_pre;
            point.train_acc_ft += r.train_acc_ft;
            point.val_acc_ft += r.val_acc_ft;
        }
        double denom = n > 0 ? n : std::numeric_limits<double>::quiet_NaN();
        point.subset_loss_pre /= denom;
        point.train_loss_pre /= denom;
        point.val_loss_pre /= denom;
        point.train_loss_ft /= denom;
        point.val_loss_ft /= denom;
        point.subset_acc_pre /= denom;
        point.train_acc_pre /= denom;
        point.val_acc_pre /= denom;
        point.train_acc_ft /= denom;
        point.val_acc_ft /= denom;
        curve.points.push_back(point);
    }
    return curve;
}

namespace {

const char* kRunsHeader =
    "b,subset_id,failed,subset_loss_pre,train_loss_pre,val_loss_pre,train_loss_ft,"
    "val_loss_ft,subset_acc_pre,train_acc_pre,val_acc_pre,train_acc_ft,val_acc_ft,"
    "sample_presentations,epoch_losses";

const char* kAggregateHeader =
    "b,fraction,run_count,failed_count,Q,Subset_pretraining,Trset_pretraining,"
    "Validset_pretraining,Trset_finetuning,Validset_finetuning,acc_Subset_pretraining,"
    "acc_Trset_pretraining,acc_Validset_pretraining,acc_Trset_finetuning,"
    "acc_Validset_finetuning,q_unity_fraction";

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, sep)) out.push_back(field);
    if (!line.empty() && line.back() == sep) out.push_back("");
    return out;
}

} // namespace

ReportPaths emit_report(const GridResult& result, const ExperimentConfig& cfg,
                        std::size_t examples, const std::filesystem::path& out_dir) {
    if (result.records.empty()) throw ConfigError("emit_report: no records");
    std::error_code ec;
    std::filesystem::create_directories(out_dir / "plotdata", ec);
    if (ec) throw DataError("cannot create output directory " + out_dir.string());

    ReportPaths paths;
    paths.runs_csv = out_dir / "runs.csv";
    paths.aggregate_csv = out_dir / "aggregate.csv";
    paths.plotdata_dir = out_dir / "plotdata";
    paths.manifest = out_dir / "manifest.json";

    {
        std::ofstream out(paths.runs_csv, std::ios::binary);
        if (!out) throw DataError("cannot write " + paths.runs_csv.string());
        out << kRunsHeader << "\n";
        for (const MetricsRecord& r : result.records) {
            out << r.b << "," << r.subset_id << "," << (r.failed ? 1 : 0) << ","
                << fmt(r.subset_loss_pre) << "," << fmt(r.train_loss_pre) << ","
                << fmt(r.val_loss_pre) << "," << fmt(r.train_loss_ft) << ","
                << fmt(r.val_loss_ft) << "," << fmt(r.subset_acc_pre) << ","
                << fmt(r.train_acc_pre) << "," << fmt(r.val_acc_pre) << ","
                << fmt(r.train_acc_ft) << "," << fmt(r.val_acc_ft) << ","
                << r.sample_presentations << ",";
            for (std::size_t i = 0; i < r.epoch_losses.size(); ++i)
                out << (i ? ";" : "") << fmt(r.epoch_losses[i]);
            out << "\n";
        }
    }

    const AggregateCurve& curve = result.curve;
    {
        std::ofstream out(paths.aggregate_csv, std::ios::binary);
        if (!out) throw DataError("cannot write " + paths.aggregate_csv.string());
        out << kAggregateHeader << "\n";
        for (const AggregatePoint& p : curve.points) {
            out << p.b << "," << fmt(p.fraction) << "," << p.run_count << ","
                << p.failed_count << "," << fmt(p.subset_q) << ","
                << fmt(p.subset_loss_pre) << "," << fmt(p.train_loss_pre) << ","
                << fmt(p.val_loss_pre) << "," << fmt(p.train_loss_ft) << ","
                << fmt(p.val_loss_ft) << "," << fmt(p.subset_acc_pre) << ","
                << fmt(p.train_acc_pre) << "," << fmt(p.val_acc_pre) << ","
                << fmt(p.train_acc_ft) << "," << fmt(p.val_acc_ft) << ","
                << fmt(curve.q_unity) << "\n";
        }
    }

    // Plot files run left to right in ascending fraction (descending b).
    std::vector<AggregatePoint> plot_points(curve.points.rbegin(), curve.points.rend());
    {
        std::ofstream out(paths.plotdata_dir / "loss.tsv", std::ios::binary);
        out << "fraction\tSubset_pretraining\tTrset_pretraining\tValidset_pretraining\t"
               "Trset_finetuning\tValidset_finetuning\n";
        for (const AggregatePoint& p : plot_points)
            out << fmt(p.fraction) << "\t" << fmt(p.subset_loss_pre) << "\t"
                << fmt(p.train_loss_pre) << "\t" << fmt(p.val_loss_pre) << "\t"
                << fmt(p.train_loss_ft) << "\t" << fmt(p.val_loss_ft) << "\n";
    }
    {
        std::ofstream out(paths.plotdata_dir / "accuracy.tsv", std::ios::binary);
        out << "fraction\tSubset_pretraining\tTrset_pretraining\tValidset_pretraining\t"
               "Trset_finetuning\tValidset_finetuning\n";
        for (const AggregatePoint& p : plot_points)
            out << fmt(p.fraction) << "\t" << fmt(p.subset_acc_pre) << "\t"
                << fmt(p.train_acc_pre) << "\t" << fmt(p.val_acc_pre) << "\t"
                << fmt(p.train_acc_ft) << "\t" << fmt(p.val_acc_ft) << "\n";
    }
    {
        std::ofstream out(paths.plotdata_dir / "cost.tsv", std::ios::binary);
        out << "fraction\trelative_cost_percent\n";
        for (const AggregatePoint& p : plot_points)
            out << fmt(p.fraction) << "\t"
                << fmt(relative_cost(p.b, cfg.epochs_pre, cfg.epochs_ft, examples)) << "\n";
    }
    {
        double min_fraction = plot_points.empty() ? 1.0 : plot_points.front().fraction;
        std::ofstream out(paths.plotdata_dir / "qline.tsv", std::ios::binary);
        out << "q_unity_fraction\tclamped\n";
        out << fmt(curve.q_unity) << "\t"
            << fmt(std::clamp(curve.q_unity, min_fraction, 1.0)) << "\n";
    }

    {
        std::size_t parameters = parameter_count(cfg.model);
        nlohmann::ordered_json manifest;
        char hash_hex[20];
        std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                      static_cast<unsigned long long>(cfg.config_hash()));
        manifest["config_hash"] = hash_hex;
        manifest["config"] = nlohmann::ordered_json::array();
        std::istringstream canon(cfg.canonical());
        std::string line;
        while (std::getline(canon, line)) manifest["config"].push_back(line);
        manifest["dataset"] = {{"tag", cfg.dataset_tag},
                               {"examples", examples},
                               {"outputs", cfg.model.class_count}};
        manifest["model"] = {{"parameters", parameters}};
        manifest["q"] = {{"full", curve.q_full}, {"unity_fraction", curve.q_unity}};
        nlohmann::ordered_json seeds;
        seeds["protocol"] = cfg.seed;
        seeds["init"] = cfg.model.master_seed;
        std::uint64_t partition_seed = SeededRng::derive_child(cfg.seed, "partition");
        nlohmann::ordered_json partition;
        for (const AggregatePoint& p : curve.points)
            partition[std::to_string(p.b)] = SeededRng::derive_child(partition_seed, p.b);
        seeds["partition"] = partition;
        manifest["seeds"] = seeds;
        manifest["artifacts"] = {"runs.csv", "aggregate.csv", "plotdata/loss.tsv",
                                 "plotdata/accuracy.tsv", "plotdata/cost.tsv",
                                 "plotdata/qline.tsv"};
        std::ofstream out(paths.manifest, std::ios::binary);
        if (!out) throw DataError("cannot write " + paths.manifest.string());
        out << manifest.dump(2) << "\n";
    }
    return paths;
}

std::vector<MetricsRecord> parse_runs_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != kRunsHeader)
        throw DataError("unexpected runs.csv header in " + path.string());
    std::vector<MetricsRecord> records;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto fields = split(line, ',');
        if (fields.size() != 15) throw DataError("malformed runs.csv row");
        MetricsRecord r;
        r.b = std::stoul(fields[0]);
        r.subset_id = std::stoul(fields[1]);
        r.failed = fields[2] == "1";
        r.subset_loss_pre = std::stod(fields[3]);
        r.train_loss_pre = std::stod(fields[4]);
        r.val_loss_pre = std::stod(fields[5]);
        r.train_loss_ft = std::stod(fields[6]);
        r.val_loss_ft = std::stod(fields[7]);
        r.subset_acc_pre = std::stod(fields[8]);
        r.train_acc_pre = std::stod(fields[9]);
        r.val_acc_pre = std::stod(fields[10]);
        r.train_acc_ft = std::stod(fields[11]);
        r.val_acc_ft = std::stod(fields[12]);
        r.sample_presentations = std::stoull(fields[13]);
        if (!fields[14].empty())
            for (const std::string& v : split(fields[14], ';'))
                r.epoch_losses.push_back(std::stod(v));
        records.push_back(std::move(r));
    }
    return records;
}

} // namespace subtrain
