#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dlcq/bounds.hpp"
#include "dlcq/coalescent.hpp"
#include "dlcq/gdl.hpp"
#include "dlcq/inference.hpp"
#include "dlcq/trees.hpp"

namespace dlcq {

struct ExperimentConfig {
    std::string species_newick;
    std::vector<std::string> quartet;  // designated quartet; empty on 4-taxon trees
    double lambda = 0.0;
    double mu = 0.0;
    long replicates = 1;
    std::vector<long> k_grid;  // strictly increasing
    long trials = 1;
    std::uint64_t master_seed = 0;
    double confidence = 0.95;   // one-sided tests and CI level
    long min_bin_support = 1000;
    int threads = 1;
    long rejection_cap = 1'000'000;

    void validate() const;  // throws DataError
};

// One-sided z for the configured confidence level.
double one_sided_z(double confidence);
// Two-sided z.
double two_sided_z(double confidence);

// ---------------------------------------------------------------------------
// Quartet gap / conditional identity verification (4-taxon trees)

struct GapBinRow {
    int i = 0;            // I value
    long support = 0;
    double gap = 0, gap_se = 0;        // P''[Q1] - P''[Q2]
    double x = 0, x_se = 0;            // P''[i_a = i_b]
    double y = 0, y_se = 0;            // P''[i_c = i_d] (balanced only)
    double prop_bound = 0;             // analytic gap lower bound at (x,y,i)
    bool share_floor_pass = false;          // x >= 1/i (and y on balanced trees)
    bool prop_pass = false;
    bool sufficient = false;           // support >= min_bin_support
};

struct EventFreqRow {
    int i = 0;
    long support = 0;
    std::string event;  // F_ab, G_ab, G_ac
    double observed = 0, observed_se = 0;
    double predicted = 0, predicted_se = 0;
    bool pass = false;  // |obs - pred| <= 3 (se_obs + se_pred)
    bool sufficient = false;
};

struct CabBinRow {
    int i = 0;
    long support = 0;
    double c_ab = 0, se = 0;
    double bound = 0;  // (gamma ^ 1/8) / i
    bool pass = false;
    bool sufficient = false;
};

struct GapReport {
    bool balanced = false;
    std::array<std::string, 4> roles;  // species acting as A,B,C,D
    long replicates = 0;
    long usable = 0;     // X >= 1
    long discarded = 0;  // rejection cap exhausted (reported, excluded)
    double p[3] = {0, 0, 0};
    double p_se[3] = {0, 0, 0};
    double gap = 0, gap_se = 0;  // P[Q1] - max(P[Q2], P[Q3]) on X >= 1
    bool gap_ci_above_zero = false;
    std::vector<GapBinRow> bins;
    std::vector<EventFreqRow> event_freqs;  // balanced trees, i >= 2
    std::vector<CabBinRow> cab;     // C_ab lower-bound checks
    double gamma_ab = 0;            // 1 - e^{-(t_R - t_mrca(A,B))}
};

GapReport run_quartet_gap(const ExperimentConfig& config);

void write_gap_csv(const GapReport& r, std::ostream& os);
void write_cab_csv(const GapReport& r, std::ostream& os);

// ---------------------------------------------------------------------------
// Survival (sigma) and lineage (alpha) bound validity

struct SurvivalQuartetRow {
    std::array<std::string, 4> species;
    double sigma_hat = 0, se = 0;
};

struct VertexRow {
    int vertex = -1;
    double vertex_time = 0;
    double mean_lineages = 0, se = 0;
};

struct SurvivalReport {
    long replicates = 0;
    std::vector<SurvivalQuartetRow> quartets;
    std::vector<VertexRow> vertices;
    double sigma_hat_min = 0, sigma_min_se = 0;
    double sigma_bound = 0;
    bool sigma_pass = false;  // sigma_hat_min >= bound - z se (one-sided)
    double alpha_hat_max = 0, alpha_max_se = 0;
    double alpha_bound = 0;
    bool alpha_pass = false;  // alpha_hat_max <= bound + z se
};

SurvivalReport run_survival_and_lineages(const ExperimentConfig& config);

void write_survival_csv(const SurvivalReport& r, std::ostream& os);

// ---------------------------------------------------------------------------
// Reconstruction success curves

struct CurvePoint {
    long k = 0;
    std::string method;  // "one" or "multi"
    long trials = 0;
    long successes = 0;
    double rate = 0, se = 0;
};

struct CurveReport {
    std::vector<CurvePoint> points;
    bool monotone_within_ci = false;  // per method
    long smallest_k_at_target = -1;   // smallest k with rate >= confidence
    double theory_k = 0;              // closed-form bound, for juxtaposition
};

CurveReport run_reconstruction_curve(const ExperimentConfig& config);

void write_curve_csv(const CurveReport& r, std::ostream& os);

// ---------------------------------------------------------------------------

// JSON run manifest (config, seed, code version, wall time).
void write_manifest(const ExperimentConfig& config, const std::string& experiment,
                    double wall_seconds, std::ostream& os);

// Low-level replicate record shared by the 4-taxon campaigns; exposed for
// tests.
struct QuartetReplicate {
    bool usable = false;     // every quartet species has a copy
    bool discarded = false;  // rejection cap exhausted on some daughter edge
    std::uint8_t q = 0;      // 1,2,3 (role topology), 0 when unusable
    int lineages = 0;     // I at R
    bool ab_same = false, cd_same = false;
    RootEvent event = RootEvent::K;
    bool nc = false, c_ab = false;
};

// Runs one DLCoal replicate on a 4-taxon tree and classifies it. Exposed
// for tests; roles as in GapReport.
QuartetReplicate simulate_quartet_replicate(const SpeciesTree& species,
                                            const std::array<std::string, 4>& roles,
                                            bool balanced, int vertex_R,
                                            const BDParams& bd,
                                            const CoalescentConfig& ccfg,
                                            RngStream& rng);

// Classifies the rooted restriction of the species tree to a designated
// quartet (all species on a 4-taxon tree): fills roles (A,B,C,D), the trace
// vertex R, and whether the restriction is balanced. In the balanced shape
// R is the quartet MRCA; in the caterpillar shape R = mrca(A,B,C) and D is
// the outgroup. Throws DataError on bad designations.
void classify_quartet_tree(const SpeciesTree& species,
                           const std::vector<std::string>& quartet,
                           std::array<std::string, 4>& roles, int& vertex_R,
                           bool& balanced);

}  // namespace dlcq
