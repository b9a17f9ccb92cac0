#pragma once

#include <cstdint>
#include <functional>
#include <memory>

#include <json.hpp>

#include "qmnum/linalg.hpp"
#include "qmnum/povm.hpp"
#include "qmnum/soft_torus.hpp"

namespace qmnum::bundle {

using torus::LocalProjector;

// Projector-valued function on the d-torus, 2 pi periodic per angle.
struct ProjectorField {
    int torus_dim = 0;
    Eigen::Index fiber_dim = 0;
    int rank = -1;  // -1 when unknown
    std::function<Mat(const std::vector<double>&)> eval;
    double lipschitz = 0.0;  // estimate when computed, else 0
};

// Two-band field E = (I + n(theta).sigma)/2 with winding number c; c = 0
// gives the constant field.
ProjectorField make_test_bundle(int c, int fiber_dim = 2);

ProjectorField field_direct_sum(const ProjectorField& a, const ProjectorField& b);
ProjectorField constant_field(const Mat& projector, int torus_dim);

// Max finite-difference ratio ||E(t)-E(t')||/dist over axis-aligned neighbor
// pairs of the M-grid (plus the half-step refinement).
double lipschitz_estimate(const ProjectorField& field, int grid);

// Map A: shift unitaries on the N^d grid tensor the fiber, projector
// sum_n |n><n| (x) E(2 pi n / N); certificate is the recomputed maximum of
// ||E(2 pi n/N) - E(2 pi (n+x_i)/N)||.
LocalProjector map_A(const ProjectorField& field, int n_grid);

// R-strictly local replacement of P, held in the joint eigenbasis of the
// commuting unitaries. Matrix elements with |dx_j| >= S or |dy_j| >= S vanish
// exactly; S = sqrt(2) sin(R/2).
struct StrictlyLocalOp {
    int d = 0;
    double r_locality = 0.0;
    double s_cutoff = 0.0;
    Mat basis;                                // joint eigenbasis columns
    std::vector<std::vector<double>> angles;  // rotated so no eigenvalue sits at the cut
    std::vector<double> cut_rotation;         // recorded global phases per axis
    Mat h_loc;                                // in the joint eigenbasis
    double deviation_from_p = 0.0;            // ||H_loc - P||
    std::vector<Eigen::Matrix<signed char, Eigen::Dynamic, Eigen::Dynamic>> crossing;  // per axis
};

// Smooth even filter with compact support [-1,1] and value 1 at 0.
double filter_value(double omega);

StrictlyLocalOp strictly_localize(const LocalProjector& p, double r_locality,
                                  std::uint64_t basis_seed = 7);

// Twisted boundary conditions: multiply each matrix element by
// prod_i exp(+- i theta_i) according to the shortest-path crossing rule.
Mat twist(const StrictlyLocalOp& h, const std::vector<double>& theta);
Mat twist_matrix(const StrictlyLocalOp& h, const Mat& m, const std::vector<double>& theta);

struct MapBOptions {
    int grid = 12;              // regime-check grid per angle
    double gap_margin = 0.1;    // eigenvalues must stay this far from 1/2
    std::uint64_t basis_seed = 7;
    bool parallel = true;
};

// Map B: E(theta) = spectral projector of twist(H_loc, theta) above 1/2.
// The returned field evaluates exactly at any angle; construction performs
// the regime sweep over the grid and records rank and a Lipschitz estimate.
ProjectorField map_B(const LocalProjector& p, double r_locality, const MapBOptions& opts = {});

struct ChernResult {
    int value = 0;
    double raw = 0.0;
    double residual = 0.0;
    int rank = 0;
    double min_abs_link = 1.0;
};

// Fukui-Hatsugai link-variable sum on an M x M grid (d = 2 only).
ChernResult chern_number(const ProjectorField& field, int grid, bool parallel = true);
ChernResult chern_number_serial(const ProjectorField& field, int grid);

struct PipelineDiag {
    double min_top_ritz = 1.0;
    double max_bottom_estimate = 0.0;
    double max_subspace_residual = 0.0;
    int rank = 0;
    double epsilon_prime = 0.0;
    Eigen::Index outcomes = 0;
};

// Chern number of B applied to the compressed local projector produced by
// map F, without materializing the ambient space: block-structured twisted
// Hamiltonian plus warm-started subspace iteration per grid point.
ChernResult chern_of_dilation(const povm::Dilation& dil, double r_locality, int grid,
                              PipelineDiag* diag = nullptr);

// E(theta) frame of the compressed path at a single angle (for dense
// cross-validation on small instances).
Mat dilation_band_frame(const povm::Dilation& dil, double r_locality,
                        const std::vector<double>& theta);

// Grid dump as a JSON array of {"theta": [...], "projector": matrix}.
nlohmann::json dump_field(const ProjectorField& field, int grid);

}  // namespace qmnum::bundle
