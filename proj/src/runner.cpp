#include "corrlab/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "corrlab/adapt.hpp"
#include "corrlab/io.hpp"

namespace corrlab::runner {

std::string ExperimentRecord::cell_name() const {
    std::ostringstream name;
    name << vae::objective_name(objective) << "_b" << beta << "_s" << sigma_to_string(sigma)
         << "_seed" << seed;
    return name.str();
}

nlohmann::json record_to_json(const ExperimentRecord& record) {
    nlohmann::json j;
    j["config_hash"] = record.config_hash;
    j["sigma"] = sigma_to_string(record.sigma);
    j["objective"] = vae::objective_name(record.objective);
    j["beta"] = record.beta;
    j["seed"] = record.seed;
    j["ok"] = record.ok;
    if (!record.ok) j["error"] = record.error;
    if (record.ok) j["scores"] = metrics::report_to_json(record.report);
    nlohmann::json adapted = nlohmann::json::array();
    for (const auto& a : record.adapted) {
        nlohmann::json aj;
        aj["labels"] = a.labels;
        aj["correlated"] = a.correlated;
        if (a.median_uncorrelated) aj["median_uncorrelated"] = *a.median_uncorrelated;
        else aj["median_uncorrelated"] = nullptr;
        aj["dim_i"] = a.dim_i;
        aj["dim_j"] = a.dim_j;
        adapted.push_back(aj);
    }
    j["adapted"] = adapted;
    j["trace_ref"] = record.trace_ref;
    j["wall_seconds"] = record.wall_seconds;
    return j;
}

ExperimentRecord record_from_json(const nlohmann::json& j) {
    ExperimentRecord record;
    record.config_hash = j.at("config_hash").get<std::string>();
    const auto& sigma = j.at("sigma");
    record.sigma = sigma.is_string() && sigma.get<std::string>() == "inf"
                       ? std::numeric_limits<double>::infinity()
                       : std::stod(sigma.get<std::string>());
    record.objective = vae::objective_from_name(j.at("objective").get<std::string>());
    record.beta = j.at("beta").get<double>();
    record.seed = j.at("seed").get<std::uint64_t>();
    record.ok = j.at("ok").get<bool>();
    if (!record.ok) record.error = j.value("error", "");
    if (record.ok) record.report = metrics::report_from_json(j.at("scores"));
    for (const auto& aj : j.at("adapted")) {
        AdaptedOutcome a;
        a.labels = aj.at("labels").get<int>();
        a.correlated = aj.at("correlated").get<double>();
        if (!aj.at("median_uncorrelated").is_null()) {
            a.median_uncorrelated = aj.at("median_uncorrelated").get<double>();
        }
        a.dim_i = aj.at("dim_i").get<int>();
        a.dim_j = aj.at("dim_j").get<int>();
        record.adapted.push_back(a);
    }
    record.trace_ref = j.at("trace_ref").get<std::string>();
    record.wall_seconds = j.at("wall_seconds").get<double>();
    return record;
}

std::filesystem::path records_path(const std::filesystem::path& out_dir) {
    return out_dir / "records.jsonl";
}

std::vector<ExperimentRecord> load_records(const std::filesystem::path& out_dir) {
    const std::filesystem::path path = records_path(out_dir);
    std::vector<ExperimentRecord> records;
    if (!std::filesystem::exists(path)) return records;

    const std::vector<std::string> lines = io::read_lines(path);
    std::vector<std::string> good;
    std::vector<std::string> bad;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        try {
            records.push_back(record_from_json(nlohmann::json::parse(lines[i])));
            good.push_back(lines[i]);
        } catch (const std::exception& e) {
            if (i + 1 == lines.size()) {
                // Interrupted final append; quarantine it and repair the store.
                bad.push_back(lines[i]);
            } else {
                throw std::runtime_error("record store corrupt at line " + std::to_string(i + 1) +
                                         ": " + e.what());
            }
        }
    }
    if (!bad.empty()) {
        std::string quarantine;
        for (const auto& line : bad) quarantine += line + "\n";
        io::write_text(path.string() + ".quarantine", quarantine);
        std::string repaired;
        for (const auto& line : good) repaired += line + "\n";
        io::write_text(path, repaired);
        std::cerr << "record store: quarantined truncated final line of " << path << "\n";
    }
    return records;
}

namespace {

std::vector<factors::FactorConfig> sample_eval_configs(const ExperimentConfig& config,
                                                       double sigma, rng::Stream& stream) {
    const factors::CorrelationSpec corr = config.correlation(sigma);
    std::vector<factors::FactorConfig> configs(static_cast<std::size_t>(config.eval_samples));
    for (auto& c : configs) c = factors::sample_config(config.space, corr, stream);
    return configs;
}

LabelMatrix labels_from_configs(const std::vector<factors::FactorConfig>& configs,
                                int n_factors) {
    LabelMatrix labels(configs.size(), static_cast<std::size_t>(n_factors));
    for (std::size_t r = 0; r < configs.size(); ++r) {
        for (int f = 0; f < n_factors; ++f) {
            labels.at(r, static_cast<std::size_t>(f)) =
                configs[r].values[static_cast<std::size_t>(f)];
        }
    }
    return labels;
}

}  // namespace

ExperimentRecord run_cell(const ExperimentConfig& config, double sigma, vae::Objective objective,
                          double beta, std::uint64_t seed,
                          const std::filesystem::path& out_dir) {
    const auto started = std::chrono::steady_clock::now();
    ExperimentRecord record;
    record.config_hash = config.canonical_hash();
    record.sigma = sigma;
    record.objective = objective;
    record.beta = beta;
    record.seed = seed;

    vae::TrainConfig train_cfg = config.train;
    train_cfg.objective = objective;
    train_cfg.beta = beta;
    const factors::CorrelationSpec corr = config.correlation(sigma);

    const vae::TrainedModel model =
        vae::train(config.space, corr, config.render, train_cfg, seed);

    rng::Stream eval_stream = rng::Stream::derive(seed, rng::kPurposeEval);
    const std::vector<factors::FactorConfig> eval_configs =
        sample_eval_configs(config, sigma, eval_stream);
    const Matrix latents =
        vae::encode_dataset(model.encoder, config.space, config.render, eval_configs);
    const LabelMatrix labels = labels_from_configs(eval_configs, config.space.count());

    record.report = metrics::evaluate(latents, labels, {config.pair_first, config.pair_second},
                                      config.eval_params);

    for (int label_count : config.adapt_label_counts) {
        if (label_count <= 0) continue;
        rng::Stream label_stream = rng::Stream::derive(seed, rng::kPurposeLabels,
                                                       static_cast<std::uint64_t>(label_count));
        std::vector<factors::FactorConfig> labeled(static_cast<std::size_t>(label_count));
        for (auto& c : labeled) {
            c.values.resize(static_cast<std::size_t>(config.space.count()));
            for (int f = 0; f < config.space.count(); ++f) {
                c.values[static_cast<std::size_t>(f)] = static_cast<int>(label_stream.uniform_int(
                    static_cast<std::uint64_t>(config.space.cardinality(f))));
            }
        }
        const Matrix labeled_latents =
            vae::encode_dataset(model.encoder, config.space, config.render, labeled);
        LabelMatrix pair_labels(labeled.size(), 2);
        for (std::size_t r = 0; r < labeled.size(); ++r) {
            pair_labels.at(r, 0) = labeled[r].values[static_cast<std::size_t>(config.pair_first)];
            pair_labels.at(r, 1) = labeled[r].values[static_cast<std::size_t>(config.pair_second)];
        }
        const auto dims = adapt::identify_entangled_dims(labeled_latents, pair_labels,
                                                         config.eval_params.gbt);
        Matrix selected(labeled.size(), 2);
        for (std::size_t r = 0; r < labeled.size(); ++r) {
            selected.at(r, 0) = labeled_latents.at(r, static_cast<std::size_t>(dims.first));
            selected.at(r, 1) = labeled_latents.at(r, static_cast<std::size_t>(dims.second));
        }
        const adapt::SubstitutionFn fn =
            adapt::fit_substitution(selected, pair_labels, dims,
                                    {config.space.cardinality(config.pair_first),
                                     config.space.cardinality(config.pair_second)},
                                    config.adapt_kind, seed);
        const Matrix adjusted = adapt::apply_substitution(latents, fn);
        const metrics::ImportanceMatrix imp =
            metrics::tree_importance(adjusted, labels, config.eval_params.gbt);
        const Matrix pairwise = metrics::pairwise_entanglement(imp);
        const metrics::PairwiseSummary summary =
            metrics::pairwise_summary(pairwise, {config.pair_first, config.pair_second});

        AdaptedOutcome outcome;
        outcome.labels = label_count;
        outcome.correlated = summary.correlated;
        outcome.median_uncorrelated = summary.median_uncorrelated;
        outcome.dim_i = dims.first;
        outcome.dim_j = dims.second;
        record.adapted.push_back(outcome);
    }

    // Loss trace CSV next to the record store.
    const std::filesystem::path trace_dir = out_dir / "traces";
    std::filesystem::create_directories(trace_dir);
    const std::string trace_name =
        record.config_hash.substr(0, 8) + "_" + record.cell_name() + ".csv";
    std::ostringstream csv;
    csv << "step,loss,recon,kl\n";
    for (const auto& point : model.trace) {
        csv << point.step << "," << point.loss << "," << point.recon << "," << point.kl << "\n";
    }
    io::write_text(trace_dir / trace_name, csv.str());
    record.trace_ref = "traces/" + trace_name;

    record.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return record;
}

std::vector<ExperimentRecord> run_sweep(const ExperimentConfig& config,
                                        const std::filesystem::path& out_dir, int jobs) {
    std::filesystem::create_directories(out_dir);
    const std::string config_hash = config.canonical_hash();

    std::vector<ExperimentRecord> existing = load_records(out_dir);
    auto cell_key = [](const ExperimentRecord& r) {
        return r.config_hash + "|" + r.cell_name();
    };
    std::set<std::string> done;
    for (const auto& r : existing) {
        if (r.ok) done.insert(cell_key(r));
    }

    struct Cell {
        double sigma;
        vae::Objective objective;
        double beta;
        std::uint64_t seed;
    };
    std::vector<Cell> todo;
    for (double sigma : config.sigmas) {
        for (vae::Objective objective : config.objectives) {
            for (double beta : config.betas) {
                for (std::uint64_t seed : config.seeds) {
                    ExperimentRecord probe;
                    probe.config_hash = config_hash;
                    probe.sigma = sigma;
                    probe.objective = objective;
                    probe.beta = beta;
                    probe.seed = seed;
                    if (!done.contains(cell_key(probe))) {
                        todo.push_back({sigma, objective, beta, seed});
                    }
                }
            }
        }
    }

    std::mutex store_mutex;
    std::vector<ExperimentRecord> fresh;
    std::atomic<std::size_t> next{0};
    const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(todo.size())));

    auto worker = [&]() {
        while (true) {
            const std::size_t index = next.fetch_add(1);
            if (index >= todo.size()) return;
            const Cell& cell = todo[index];
            ExperimentRecord record;
            try {
                record = run_cell(config, cell.sigma, cell.objective, cell.beta, cell.seed,
                                  out_dir);
            } catch (const std::exception& e) {
                record = ExperimentRecord{};
                record.config_hash = config_hash;
                record.sigma = cell.sigma;
                record.objective = cell.objective;
                record.beta = cell.beta;
                record.seed = cell.seed;
                record.ok = false;
                record.error = e.what();
            }
            const std::string line = record_to_json(record).dump();
            {
                std::lock_guard<std::mutex> lock(store_mutex);
                io::append_line(records_path(out_dir), line);
                fresh.push_back(record);
                std::cerr << "sweep: " << record.cell_name() << (record.ok ? " done" : " FAILED")
                          << " (" << record.wall_seconds << " s)\n";
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    std::vector<ExperimentRecord> all;
    for (const auto& r : existing) {
        if (r.config_hash == config_hash && r.ok) all.push_back(r);
    }
    for (const auto& r : fresh) all.push_back(r);
    return all;
}

namespace {

struct GroupKey {
    std::string objective;
    double beta;
    double sigma;

    bool operator<(const GroupKey& other) const {
        if (objective != other.objective) return objective < other.objective;
        if (beta != other.beta) return beta < other.beta;
        // inf compares greater than every finite sigma, which puts the
        // uncorrelated column last.
        return sigma < other.sigma;
    }
};

double mean(const std::vector<double>& values) {
    double total = 0.0;
    for (double v : values) total += v;
    return values.empty() ? 0.0 : total / static_cast<double>(values.size());
}

double median(std::vector<double> values) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const std::size_t m = values.size();
    return m % 2 == 1 ? values[m / 2] : 0.5 * (values[m / 2 - 1] + values[m / 2]);
}

}  // namespace

std::vector<SummaryRow> summarize(const std::vector<ExperimentRecord>& records) {
    std::map<GroupKey, std::vector<const ExperimentRecord*>> groups;
    for (const auto& r : records) {
        if (!r.ok) continue;
        groups[{vae::objective_name(r.objective), r.beta, r.sigma}].push_back(&r);
    }
    std::vector<SummaryRow> rows;
    for (const auto& [key, group] : groups) {
        SummaryRow row;
        row.objective = vae::objective_from_name(key.objective);
        row.beta = key.beta;
        row.sigma = key.sigma;
        row.models = static_cast<int>(group.size());
        std::vector<double> correlated, medians, dci, mig, sap, unfair;
        std::map<int, std::pair<std::vector<double>, std::vector<double>>> adapted;
        for (const ExperimentRecord* r : group) {
            correlated.push_back(r->report.summary.correlated);
            if (r->report.summary.median_uncorrelated) {
                medians.push_back(*r->report.summary.median_uncorrelated);
            }
            dci.push_back(r->report.dci);
            mig.push_back(r->report.mig);
            sap.push_back(r->report.sap);
            unfair.push_back(r->report.unfairness_mean());
            for (const auto& a : r->adapted) {
                adapted[a.labels].first.push_back(a.correlated);
                if (a.median_uncorrelated) {
                    adapted[a.labels].second.push_back(*a.median_uncorrelated);
                }
            }
        }
        row.mean_correlated = mean(correlated);
        row.median_of_median_uncorrelated = median(medians);
        row.mean_dci = mean(dci);
        row.mean_mig = mean(mig);
        row.mean_sap = mean(sap);
        row.mean_unfairness = mean(unfair);
        for (const auto& [labels, values] : adapted) {
            row.adapted.emplace_back(labels, mean(values.first), mean(values.second));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string summary_table_text(const std::vector<SummaryRow>& rows) {
    std::ostringstream out;
    // One block per (objective, beta); sigma columns in ascending order with
    // the uncorrelated limit last.
    std::map<std::pair<std::string, double>, std::vector<const SummaryRow*>> blocks;
    for (const auto& row : rows) {
        blocks[{vae::objective_name(row.objective), row.beta}].push_back(&row);
    }
    for (const auto& [key, block] : blocks) {
        std::vector<const SummaryRow*> ordered(block);
        std::sort(ordered.begin(), ordered.end(),
                  [](const SummaryRow* a, const SummaryRow* b) { return a->sigma < b->sigma; });
        out << key.first << " (beta=" << key.second << ")\n";
        auto emit_row = [&](const std::string& label, auto getter) {
            out << "  " << label;
            for (std::size_t i = label.size(); i < 28; ++i) out << ' ';
            for (const SummaryRow* row : ordered) {
                char buffer[32];
                std::snprintf(buffer, sizeof(buffer), "%10.4f", getter(*row));
                out << buffer;
            }
            out << '\n';
        };
        out << "  sigma                       ";
        for (const SummaryRow* row : ordered) {
            char buffer[32];
            std::snprintf(buffer, sizeof(buffer), "%10s", sigma_to_string(row->sigma).c_str());
            out << buffer;
        }
        out << '\n';
        emit_row("correlated pair", [](const SummaryRow& r) { return r.mean_correlated; });
        emit_row("median uncorrelated pairs",
                 [](const SummaryRow& r) { return r.median_of_median_uncorrelated; });
        emit_row("dci", [](const SummaryRow& r) { return r.mean_dci; });
        emit_row("mig", [](const SummaryRow& r) { return r.mean_mig; });
        emit_row("sap", [](const SummaryRow& r) { return r.mean_sap; });
        emit_row("unfairness", [](const SummaryRow& r) { return r.mean_unfairness; });
        // Adapted scores, one line per label budget.
        std::set<int> budgets;
        for (const SummaryRow* row : ordered) {
            for (const auto& [labels, c, m] : row->adapted) budgets.insert(labels);
        }
        for (int budget : budgets) {
            emit_row("adapted@" + std::to_string(budget), [budget](const SummaryRow& r) {
                for (const auto& [labels, c, m] : r.adapted) {
                    if (labels == budget) return c;
                }
                return std::nan("");
            });
        }
        out << '\n';
    }
    return out.str();
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
    std::ostringstream out;
    out << "objective,beta,sigma,models,mean_correlated,median_uncorrelated,mean_dci,mean_mig,"
           "mean_sap,mean_unfairness\n";
    for (const auto& row : rows) {
        out << vae::objective_name(row.objective) << "," << row.beta << ","
            << sigma_to_string(row.sigma) << "," << row.models << "," << row.mean_correlated
            << "," << row.median_of_median_uncorrelated << "," << row.mean_dci << ","
            << row.mean_mig << "," << row.mean_sap << "," << row.mean_unfairness << "\n";
    }
    return out.str();
}

}  // namespace corrlab::runner
