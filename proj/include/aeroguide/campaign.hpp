#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "aeroguide/engine.hpp"

namespace aeroguide {

/// Scenario sweep axes; an empty axis means "use the base value".
struct SweepAxes {
    std::vector<GuidanceMode> modes;
    std::vector<std::string> orbits;
    std::vector<double> radius_multipliers;
    std::vector<double> rate_multipliers;
    std::vector<int> fleet_sizes;
};

struct CampaignSpec {
    TrialConfig base;
    SweepAxes sweep;
    int n_trials = 1000;
    int workers = 0;            // 0 = hardware concurrency
    std::string out_dir = "out";
    std::uint64_t seed = 1;
};

/// Parse a campaign config (JSON). Unknown keys are rejected with the path to
/// the offending field; missing keys take the documented defaults. An empty
/// input yields the nominal 3-balloon VAMOS autonomous campaign.
CampaignSpec parse_config(const std::string& json_text, const std::string& name = "config");
CampaignSpec parse_config_file(const std::string& path);

/// Canonical JSON for a spec; parse(serialize(spec)) == spec.
std::string serialize_config(const CampaignSpec& spec);

/// One sweep cell: a fully resolved trial configuration plus its label.
struct CampaignCell {
    std::string name;
    TrialConfig cfg;
};

std::vector<CampaignCell> expand_cells(const CampaignSpec& spec);

struct MetricStats {
    double mean = 0, stddev = 0, min = 0, max = 0, q25 = 0, q50 = 0, q75 = 0;
};

MetricStats summarize(std::vector<double> values);

struct CellResult {
    std::string name;
    int n_trials = 0;
    std::vector<TrialMetrics> trials;                 // indexed by trial number
    std::map<std::string, MetricStats> stats;
    std::vector<double> visit_distance_histogram;     // counts per 2.5 km up to 50 km
};

/// Run one cell: trials are dispatched to a worker pool, trial seeds are
/// derived from the campaign seed and trial index (mode-independent, so cells
/// with equal trial counts are seed-paired), and the aggregate is independent
/// of the worker count.
CellResult run_cell(const TrialConfig& cell_cfg, int n_trials, int workers,
                    std::uint64_t campaign_seed, const SharedWorld& world);

/// Metric columns exported to trials.csv / summary.json, in order.
const std::vector<std::string>& metric_names();
std::vector<double> metric_values(const TrialMetrics& m);

void write_trials_csv(const CellResult& cell, std::ostream& out);
void write_visits_csv(const CellResult& cell, std::ostream& out);
std::string summary_json(const CellResult& cell, const TrialConfig& cfg);

/// Execute a campaign: one subdirectory per cell with trials.csv, visits.csv
/// and summary.json, plus a campaign-level comparison table. Cells whose
/// summary.json already exists are skipped (resume support). Returns the
/// process exit code (0 ok, 1 simulation failure).
int run_campaign(const CampaignSpec& spec, std::ostream& log);

/// Build comparison tables from summary JSON files: metric means/stddevs side
/// by side per mode plus percentage-gain columns, and a closest-approach
/// histogram CSV. Pure function of the summaries.
int report_summaries(const std::vector<std::string>& summary_paths, const std::string& out_dir,
                     std::ostream& log);

}  // namespace aeroguide
