#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "corrlab/config.hpp"
#include "corrlab/metrics.hpp"
#include "corrlab/vae.hpp"

namespace corrlab::runner {

// Pairwise scores after fast adaptation with a given label budget.
struct AdaptedOutcome {
    int labels = 0;
    double correlated = 0.0;
    std::optional<double> median_uncorrelated;
    int dim_i = 0;
    int dim_j = 0;
};

// One sweep cell's outcome, one JSON line in the record store.
struct ExperimentRecord {
    std::string config_hash;
    double sigma = 0.0;
    vae::Objective objective = vae::Objective::BetaVae;
    double beta = 0.0;
    std::uint64_t seed = 0;
    bool ok = true;
    std::string error;
    metrics::ScoreReport report;
    std::vector<AdaptedOutcome> adapted;
    std::string trace_ref;
    double wall_seconds = 0.0;

    std::string cell_name() const;
};

nlohmann::json record_to_json(const ExperimentRecord& record);
ExperimentRecord record_from_json(const nlohmann::json& j);

// Record store layout under an output directory.
std::filesystem::path records_path(const std::filesystem::path& out_dir);

// Loads every parseable record; a truncated or corrupt final line is moved to
// records.jsonl.quarantine and removed from the store.
std::vector<ExperimentRecord> load_records(const std::filesystem::path& out_dir);

// Train + evaluate + adapt one cell. Deterministic given (config, cell).
ExperimentRecord run_cell(const ExperimentConfig& config, double sigma,
                          vae::Objective objective, double beta, std::uint64_t seed,
                          const std::filesystem::path& out_dir);

// Cartesian sweep over sigmas x objectives x betas x seeds with `jobs`
// concurrent cells. Completed cells present in the store are skipped; failed
// cells are recorded and re-attempted on the next run. Returns all records of
// this config, including preexisting ones.
std::vector<ExperimentRecord> run_sweep(const ExperimentConfig& config,
                                        const std::filesystem::path& out_dir, int jobs);

struct SummaryRow {
    vae::Objective objective = vae::Objective::BetaVae;
    double beta = 0.0;
    double sigma = 0.0;
    int models = 0;
    double mean_correlated = 0.0;
    double median_of_median_uncorrelated = 0.0;
    double mean_dci = 0.0;
    double mean_mig = 0.0;
    double mean_sap = 0.0;
    double mean_unfairness = 0.0;
    // label budget -> (mean adapted correlated, mean adapted median-uncorr)
    std::vector<std::tuple<int, double, double>> adapted;
};

// Aggregates per (objective, beta, sigma), sigma ascending with inf last.
std::vector<SummaryRow> summarize(const std::vector<ExperimentRecord>& records);

std::string summary_table_text(const std::vector<SummaryRow>& rows);
std::string summary_csv(const std::vector<SummaryRow>& rows);

}  // namespace corrlab::runner
