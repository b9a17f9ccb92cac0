#pragma once

#include <cstdint>
#include <optional>

#include <json.hpp>

#include "qmnum/common.hpp"

namespace qmnum::torus {

// Tuple of same-dimension unitaries with a certified bound on every pairwise
// commutator norm. The stored epsilon never understates the recomputed value.
struct SoftTorus {
    std::vector<Mat> u;
    double epsilon = 0.0;

    int d() const { return static_cast<int>(u.size()); }
    Eigen::Index dim() const { return u.empty() ? 0 : u.front().rows(); }
};

// Exactly commuting unitaries plus a projector almost commuting with each.
struct LocalProjector {
    std::vector<Mat> u;
    Mat p;
    double epsilon = 0.0;

    int d() const { return static_cast<int>(u.size()); }
    Eigen::Index dim() const { return p.rows(); }
};

// Validates unitarity and the stored certificate; returns the recomputed
// pairwise commutator bound.
double commutator_epsilon(const SoftTorus& t);
double locality_epsilon(const LocalProjector& p);

void validate(const SoftTorus& t, double tol = 1e-10);
void validate(const LocalProjector& p, double tol = 1e-10);

// The discrete constant-curvature pair on the two-torus: a d=2 soft torus of
// dimension N^2 with V^dag U^dag V U = exp(i 2 pi / N^2) and commutator norm
// |exp(i 2 pi / N^2) - 1|.
SoftTorus voiculescu_pair(int n);

// Transport phase around one lattice square; equal for all squares.
cxd plaquette_phase(int n);

// Per-square phases, row-major over (m, n), for tests of constancy.
std::vector<cxd> plaquette_phases(int n);

// Map G: compress each unitary to the range of P and take the polar. The
// output certificate is the recomputed commutator bound. Singular compressed
// blocks are nudged by x*z with the deterministic z sequence before the polar
// (recorded in `perturbed`).
struct MapGResult {
    SoftTorus torus;
    bool perturbed = false;
    cxd z{1.0, 0.0};
};
MapGResult map_G(const LocalProjector& p);

SoftTorus direct_sum(const SoftTorus& a, const SoftTorus& b);
LocalProjector direct_sum(const LocalProjector& a, const LocalProjector& b);

// Same unitaries, projector 1-P; keeps the certificate.
LocalProjector complement(const LocalProjector& p);

// Upper bound on the conjugation distance min_Y max_i ||Y^dag U_i Y - V_i||,
// minimized over a heuristic family of alignments (identity, spectral
// alignment of the first pair, iterated cross-Gram fixed point).
double distance_upper(const SoftTorus& a, const SoftTorus& b);

// Deterministic unit-modulus z sequence used by the polar perturbation rule.
cxd z_direction(int attempt);

nlohmann::json to_json(const SoftTorus& t);
nlohmann::json to_json(const LocalProjector& p);
SoftTorus soft_torus_from_json(const nlohmann::json& j);
LocalProjector local_projector_from_json(const nlohmann::json& j);

}  // namespace qmnum::torus
