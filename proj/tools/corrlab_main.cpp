#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "corrlab/adapt.hpp"
#include "corrlab/config.hpp"
#include "corrlab/io.hpp"
#include "corrlab/metrics.hpp"
#include "corrlab/runner.hpp"
#include "corrlab/simd.hpp"
#include "corrlab/theory.hpp"
#include "corrlab/vae.hpp"

namespace {

namespace fs = std::filesystem;
using corrlab::Matrix;
using corrlab::LabelMatrix;

double parse_sigma(const std::string& text) {
    if (text == "inf") return std::numeric_limits<double>::infinity();
    const double sigma = std::stod(text);
    if (!(sigma > 0.0)) throw std::domain_error("sigma must be positive (or \"inf\")");
    return sigma;
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stod(item));
    }
    return out;
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stoi(item));
    }
    return out;
}

corrlab::runner::ExperimentConfig load_config(const std::string& path) {
    if (path.empty()) return corrlab::runner::ExperimentConfig{};
    return corrlab::runner::ExperimentConfig::load(path);
}

corrlab::vae::TrainedModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::domain_error("cannot open model file " + path);
    nlohmann::json j;
    in >> j;
    return corrlab::vae::model_from_json(j);
}

LabelMatrix labels_from_configs(const std::vector<corrlab::factors::FactorConfig>& configs,
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

int cmd_generate_dataset(const corrlab::runner::ExperimentConfig& config, double sigma,
                         int count, int dump_images, std::uint64_t seed, const fs::path& out) {
    fs::create_directories(out);
    const auto corr = config.correlation(sigma);
    corrlab::rng::Stream stream = corrlab::rng::Stream::derive(seed, corrlab::rng::kPurposeData);

    const fs::path dataset = out / "dataset.jsonl";
    std::ofstream file(dataset);
    if (!file) throw std::runtime_error("cannot open " + dataset.string());

    nlohmann::json header;
    header["type"] = "header";
    header["config"] = config.to_json();
    header["sigma"] = corrlab::runner::sigma_to_string(sigma);
    header["seed"] = seed;
    header["count"] = count;
    file << header.dump() << "\n";

    for (int i = 0; i < count; ++i) {
        const auto cfg = corrlab::factors::sample_config(config.space, corr, stream);
        const auto obs = corrlab::factors::render(config.space, cfg, config.render);
        nlohmann::json rec;
        rec["type"] = "sample";
        rec["values"] = cfg.values;
        rec["pixels"] = obs.pixels;
        file << rec.dump() << "\n";
        if (i < dump_images) {
            fs::create_directories(out / "images");
            std::ostringstream name;
            name << "sample_" << i << ".pgm";
            corrlab::io::write_pgm(out / "images" / name.str(), config.render.width,
                                   config.render.height, obs.pixels);
        }
    }
    std::cout << "wrote " << count << " samples to " << dataset << "\n";
    return 0;
}

int cmd_train(const corrlab::runner::ExperimentConfig& config, double sigma,
              const std::string& objective, double beta, std::uint64_t seed,
              const fs::path& out) {
    fs::create_directories(out);
    corrlab::vae::TrainConfig train_cfg = config.train;
    train_cfg.objective = corrlab::vae::objective_from_name(objective);
    train_cfg.beta = beta;
    const auto corr = config.correlation(sigma);
    const auto model = corrlab::vae::train(config.space, corr, config.render, train_cfg, seed);

    std::ofstream file(out / "model.json");
    file << corrlab::vae::model_to_json(model).dump() << "\n";

    std::ostringstream csv;
    csv << "step,loss,recon,kl\n";
    for (const auto& p : model.trace) {
        csv << p.step << "," << p.loss << "," << p.recon << "," << p.kl << "\n";
    }
    corrlab::io::write_text(out / "trace.csv", csv.str());
    std::cout << "trained " << objective << " (beta=" << beta << ", sigma="
              << corrlab::runner::sigma_to_string(sigma) << ", seed=" << seed << "); final loss "
              << (model.trace.empty() ? 0.0 : model.trace.back().loss) << "\n";
    return 0;
}

struct EvalData {
    Matrix latents;
    LabelMatrix labels;
};

EvalData evaluate_latents(const corrlab::runner::ExperimentConfig& config,
                          const corrlab::vae::TrainedModel& model, double sigma,
                          std::uint64_t seed) {
    corrlab::rng::Stream stream = corrlab::rng::Stream::derive(seed, corrlab::rng::kPurposeEval);
    const auto corr = config.correlation(sigma);
    std::vector<corrlab::factors::FactorConfig> configs(
        static_cast<std::size_t>(config.eval_samples));
    for (auto& c : configs) c = corrlab::factors::sample_config(config.space, corr, stream);
    EvalData data;
    data.latents = corrlab::vae::encode_dataset(model.encoder, config.space, config.render, configs);
    data.labels = labels_from_configs(configs, config.space.count());
    return data;
}

int cmd_evaluate(const corrlab::runner::ExperimentConfig& config, const std::string& model_path,
                 double sigma, std::uint64_t seed, const fs::path& out) {
    fs::create_directories(out);
    const auto model = load_model(model_path);
    const EvalData data = evaluate_latents(config, model, sigma, seed);
    const auto report = corrlab::metrics::evaluate(
        data.latents, data.labels, {config.pair_first, config.pair_second}, config.eval_params);

    std::ofstream file(out / "scores.json");
    file << corrlab::metrics::report_to_json(report).dump(2) << "\n";

    // Pairwise matrix as CSV with factor names.
    std::ostringstream csv;
    csv << "factor";
    for (const auto& f : config.space.factors()) csv << "," << f.name;
    csv << "\n";
    for (int i = 0; i < config.space.count(); ++i) {
        csv << config.space.at(i).name;
        for (int j = 0; j < config.space.count(); ++j) {
            csv << "," << report.pairwise.at(static_cast<std::size_t>(i),
                                             static_cast<std::size_t>(j));
        }
        csv << "\n";
    }
    corrlab::io::write_text(out / "pairwise.csv", csv.str());

    std::cout << "mig=" << report.mig << " dci=" << report.dci << " sap=" << report.sap
              << " correlated=" << report.summary.correlated;
    if (report.summary.median_uncorrelated) {
        std::cout << " median_uncorrelated=" << *report.summary.median_uncorrelated;
    }
    std::cout << " unfairness=" << report.unfairness_mean() << "\n";
    return 0;
}

int cmd_adapt(const corrlab::runner::ExperimentConfig& config, const std::string& model_path,
              double sigma, int labels, const std::string& kind_name, std::uint64_t seed,
              const fs::path& out) {
    fs::create_directories(out);
    const auto model = load_model(model_path);
    const auto kind = kind_name == "mlp" ? corrlab::adapt::SubstitutionKind::Mlp
                                         : corrlab::adapt::SubstitutionKind::Linear;

    corrlab::rng::Stream label_stream = corrlab::rng::Stream::derive(
        seed, corrlab::rng::kPurposeLabels, static_cast<std::uint64_t>(labels));
    std::vector<corrlab::factors::FactorConfig> labeled(static_cast<std::size_t>(labels));
    for (auto& c : labeled) {
        c.values.resize(static_cast<std::size_t>(config.space.count()));
        for (int f = 0; f < config.space.count(); ++f) {
            c.values[static_cast<std::size_t>(f)] = static_cast<int>(
                label_stream.uniform_int(static_cast<std::uint64_t>(config.space.cardinality(f))));
        }
    }
    const Matrix labeled_latents =
        corrlab::vae::encode_dataset(model.encoder, config.space, config.render, labeled);
    LabelMatrix pair_labels(labeled.size(), 2);
    for (std::size_t r = 0; r < labeled.size(); ++r) {
        pair_labels.at(r, 0) = labeled[r].values[static_cast<std::size_t>(config.pair_first)];
        pair_labels.at(r, 1) = labeled[r].values[static_cast<std::size_t>(config.pair_second)];
    }
    const auto dims = corrlab::adapt::identify_entangled_dims(labeled_latents, pair_labels,
                                                              config.eval_params.gbt);
    Matrix selected(labeled.size(), 2);
    for (std::size_t r = 0; r < labeled.size(); ++r) {
        selected.at(r, 0) = labeled_latents.at(r, static_cast<std::size_t>(dims.first));
        selected.at(r, 1) = labeled_latents.at(r, static_cast<std::size_t>(dims.second));
    }
    const auto fn = corrlab::adapt::fit_substitution(
        selected, pair_labels, dims,
        {config.space.cardinality(config.pair_first),
         config.space.cardinality(config.pair_second)},
        kind, seed);

    std::ofstream file(out / "substitution.json");
    file << corrlab::adapt::substitution_to_json(fn).dump(2) << "\n";

    const EvalData data = evaluate_latents(config, model, sigma, seed);
    const auto before_imp =
        corrlab::metrics::tree_importance(data.latents, data.labels, config.eval_params.gbt);
    const auto before =
        corrlab::metrics::pairwise_summary(corrlab::metrics::pairwise_entanglement(before_imp),
                                           {config.pair_first, config.pair_second});
    const Matrix adjusted = corrlab::adapt::apply_substitution(data.latents, fn);
    const auto after_imp =
        corrlab::metrics::tree_importance(adjusted, data.labels, config.eval_params.gbt);
    const auto after =
        corrlab::metrics::pairwise_summary(corrlab::metrics::pairwise_entanglement(after_imp),
                                           {config.pair_first, config.pair_second});

    nlohmann::json result;
    result["labels"] = labels;
    result["kind"] = kind_name;
    result["dims"] = {dims.first, dims.second};
    result["correlated_before"] = before.correlated;
    result["correlated_after"] = after.correlated;
    corrlab::io::write_text(out / "adapted_scores.json", result.dump(2) + "\n");
    std::cout << "dims=(" << dims.first << "," << dims.second << ") correlated "
              << before.correlated << " -> " << after.correlated << "\n";
    return 0;
}

int cmd_sweep(const corrlab::runner::ExperimentConfig& config, const fs::path& out, int jobs) {
    const auto records = corrlab::runner::run_sweep(config, out, jobs);
    std::cout << "sweep complete: " << records.size() << " records in "
              << corrlab::runner::records_path(out) << "\n";
    return 0;
}

int cmd_summarize(const fs::path& out, const std::string& csv_path) {
    const auto records = corrlab::runner::load_records(out);
    if (records.empty()) {
        std::cerr << "no records found under " << out << "\n";
        return 1;
    }
    const auto rows = corrlab::runner::summarize(records);
    std::cout << corrlab::runner::summary_table_text(rows);
    const fs::path csv = csv_path.empty() ? out / "summary.csv" : fs::path(csv_path);
    corrlab::io::write_text(csv, corrlab::runner::summary_csv(rows));
    std::cout << "summary csv: " << csv << "\n";
    return 0;
}

int cmd_traverse(const corrlab::runner::ExperimentConfig& config, const std::string& model_path,
                 const std::string& base_text, int dim, const std::string& values_text,
                 const fs::path& out) {
    fs::create_directories(out);
    const auto model = load_model(model_path);

    corrlab::factors::FactorConfig base;
    if (base_text.empty()) {
        for (int f = 0; f < config.space.count(); ++f) {
            base.values.push_back(config.space.cardinality(f) / 2);
        }
    } else {
        base.values = parse_int_list(base_text);
    }
    std::vector<double> values = values_text.empty()
                                     ? std::vector<double>{-2, -1.333, -0.667, 0, 0.667, 1.333, 2}
                                     : parse_double_list(values_text);

    const auto frames =
        corrlab::vae::latent_traversal(model, config.space, config.render, base, dim, values);
    const int w = config.render.width;
    const int h = config.render.height;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        std::ostringstream name;
        name << "traversal_dim" << dim << "_" << i << ".pgm";
        corrlab::io::write_pgm(out / name.str(), w, h, frames[i].pixels);
    }
    // Horizontal strip of every frame.
    std::vector<double> strip(static_cast<std::size_t>(w) * frames.size() * h);
    for (std::size_t i = 0; i < frames.size(); ++i) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                strip[static_cast<std::size_t>(y) * (w * frames.size()) + i * w + x] =
                    frames[i].pixels[static_cast<std::size_t>(y) * w + x];
            }
        }
    }
    std::ostringstream name;
    name << "traversal_dim" << dim << "_strip.pgm";
    corrlab::io::write_pgm(out / name.str(), w * static_cast<int>(frames.size()), h, strip);
    std::cout << "wrote " << frames.size() << " frames + strip to " << out << "\n";
    return 0;
}

int cmd_theory_demo(const std::vector<double>& rhos) {
    std::cout << "rho,diagonal_min_kl,analytic_gap,whitening_kl\n";
    for (double rho : rhos) {
        const corrlab::theory::GaussianWorld world{rho};
        const auto fit = corrlab::theory::min_kl_over_diagonal(world);
        const double whitening =
            corrlab::theory::pullback_prior_kl(world, corrlab::theory::whitening_map(world));
        std::cout << rho << "," << fit.kl << "," << corrlab::theory::analytic_diagonal_gap(rho)
                  << "," << whitening << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"corrlab: disentanglement experiments on correlated factor worlds"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed = 1;
    int jobs = 1;
    app.add_option("--config", config_path, "experiment config JSON")
        ->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "master seed");
    app.add_option("--jobs", jobs, "concurrent sweep cells");
    app.fallthrough();

    // generate-dataset
    auto* gen = app.add_subcommand("generate-dataset", "sample and export a dataset as JSONL");
    std::string gen_sigma = "0.2";
    int gen_count = 1000;
    int gen_images = 0;
    gen->add_option("--sigma", gen_sigma, "correlation strength (or \"inf\")");
    gen->add_option("--count", gen_count, "number of samples");
    gen->add_option("--dump-images", gen_images, "also write the first N samples as PGM");

    // train
    auto* train = app.add_subcommand("train", "train one model");
    std::string train_sigma = "0.2";
    std::string train_objective = "beta_vae";
    double train_beta = 4.0;
    train->add_option("--sigma", train_sigma, "correlation strength (or \"inf\")");
    train->add_option("--objective", train_objective, "beta_vae | ada_gvae");
    train->add_option("--beta", train_beta, "beta weight");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "score a trained model");
    std::string eval_model;
    std::string eval_sigma = "0.2";
    evaluate->add_option("--model", eval_model, "model checkpoint")->required();
    evaluate->add_option("--sigma", eval_sigma, "evaluation sampling sigma");

    // adapt
    auto* adapt_cmd = app.add_subcommand("adapt", "few-label fast adaptation of a model");
    std::string adapt_model;
    std::string adapt_sigma = "0.2";
    int adapt_labels = 100;
    std::string adapt_kind = "linear";
    adapt_cmd->add_option("--model", adapt_model, "model checkpoint")->required();
    adapt_cmd->add_option("--sigma", adapt_sigma, "evaluation sampling sigma");
    adapt_cmd->add_option("--labels", adapt_labels, "number of labeled samples");
    adapt_cmd->add_option("--kind", adapt_kind, "linear | mlp");

    // sweep, summarize
    auto* sweep = app.add_subcommand("sweep", "run the configured sweep");
    auto* summarize = app.add_subcommand("summarize", "aggregate records into tables");
    std::string summary_csv_path;
    summarize->add_option("--csv", summary_csv_path, "summary CSV path");

    // traverse
    auto* traverse = app.add_subcommand("traverse", "latent traversal image strips");
    std::string trav_model;
    std::string trav_base;
    std::string trav_values;
    int trav_dim = 0;
    traverse->add_option("--model", trav_model, "model checkpoint")->required();
    traverse->add_option("--base", trav_base, "base factor config, comma separated");
    traverse->add_option("--dim", trav_dim, "latent dimension to sweep");
    traverse->add_option("--values", trav_values, "latent values, comma separated");

    // theory-demo
    auto* theory = app.add_subcommand("theory-demo", "closed-form likelihood-gap table");
    std::vector<double> theory_rhos;
    theory->add_option("--rho", theory_rhos, "correlation coefficient(s)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (theory->parsed()) {
            if (theory_rhos.empty()) {
                for (int i = 1; i <= 9; ++i) theory_rhos.push_back(0.1 * i);
            }
            return cmd_theory_demo(theory_rhos);
        }
        if (summarize->parsed()) return cmd_summarize(out_dir, summary_csv_path);

        const auto config = load_config(config_path);
        if (gen->parsed()) {
            return cmd_generate_dataset(config, parse_sigma(gen_sigma), gen_count, gen_images,
                                        seed, out_dir);
        }
        if (train->parsed()) {
            return cmd_train(config, parse_sigma(train_sigma), train_objective, train_beta, seed,
                             out_dir);
        }
        if (evaluate->parsed()) {
            return cmd_evaluate(config, eval_model, parse_sigma(eval_sigma), seed, out_dir);
        }
        if (adapt_cmd->parsed()) {
            return cmd_adapt(config, adapt_model, parse_sigma(adapt_sigma), adapt_labels,
                             adapt_kind, seed, out_dir);
        }
        if (sweep->parsed()) return cmd_sweep(config, out_dir, jobs);
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
