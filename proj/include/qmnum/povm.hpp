#pragma once

#include <cstdint>
#include <optional>

#include "qmnum/linalg.hpp"
#include "qmnum/soft_torus.hpp"

namespace qmnum::povm {

using torus::LocalProjector;
using torus::SoftTorus;

enum class Window { Bump, Hann };

// Partition-of-unity window: F >= 0, supported on [-1,1], sum_n F(x+n) = 1.
double window_value(Window w, double x);

// One POVM outcome: shift indices per axis and the ordered factor product
// A = F(X_1/D - m_1)^{1/2} ... F(X_d/D - m_d)^{1/2} F(Y_1/D - n_1)^{1/2} ...
// The element is E = A A^dag. Outcome indices are chosen so the window at
// index m captures the spectral region X ~ m*Delta.
struct Outcome {
    std::vector<int> m;  // size d
    std::vector<int> n;  // size d
    Mat a;               // D x D factor product
};

struct PovmSystem {
    int d = 0;
    Eigen::Index dim = 0;
    double delta = 0.0;
    Window window = Window::Bump;
    int index_bound = 0;  // |m_i|, |n_i| <= index_bound
    std::vector<Outcome> outcomes;
    double completeness_defect = 0.0;  // ||sum E - I||

    Eigen::Index count() const { return static_cast<Eigen::Index>(outcomes.size()); }
    Mat element(Eigen::Index c) const { return outcomes[c].a * outcomes[c].a.adjoint(); }

    // Compressed Pi-conjugation of an outcome-diagonal operator:
    // sum_c w(c) E_c as a dim x dim matrix, accumulated in index order.
    Mat weighted_sum(const std::function<cxd(const Outcome&)>& w) const;
};

struct PovmOptions {
    std::optional<double> delta_override;
    Window window = Window::Bump;
    bool parallel = true;
    // Outcomes with squared factor norm below this are dropped and the POVM
    // is renormalized to exact completeness (T^{-1/2} E T^{-1/2}). Zero keeps
    // every outcome with a nonvanishing window product; used by the
    // topological pipeline where the dimension must be kept down.
    double prune_threshold = 0.0;
};

PovmSystem build_povm(const SoftTorus& t, double delta, Window window = Window::Bump,
                      bool parallel = true, double prune_threshold = 0.0);

// Serial reference kept for kernel tests.
PovmSystem build_povm_serial(const SoftTorus& t, double delta, Window window = Window::Bump,
                             double prune_threshold = 0.0);

// Naimark dilation of the POVM plus the commuting phase unitaries of map F.
// The ambient space is the direct sum of one D-dimensional block per outcome;
// W stacks the A_c^dag, Pi = W W^dag, Q_c is the c-th coordinate block, and
// U'_i acts on block c as the scalar polar(m_i Delta + i n_i Delta + x z).
// Everything observable is evaluated through D x D compressions; dense
// materialization is available for cross-checks when count*dim is small.
struct Dilation {
    PovmSystem povm;
    cxd z{1.0, 0.0};
    double x_shift = 0.0;                      // 0 when no axis needed the nudge
    std::vector<std::vector<cxd>> phases;      // phases[i][c], |.| = 1
    std::vector<Mat> k;                        // K_i = sum_c phases[i][c] E_c
    double epsilon = 0.0;                      // max_i ||[Pi, U'_i]|| via the K identity

    Eigen::Index ambient_dim() const { return povm.count() * povm.dim; }

    Mat isometry() const;                      // W, ambient x D
    Mat projector_dense() const;               // Pi, ambient x ambient
    Mat outcome_projector_dense(Eigen::Index c) const;
    Mat unitary_dense(int axis) const;         // U'_i, ambient x ambient

    // ||[Pi, U'_i]|| from the dense matrices (small instances only).
    double commutator_dense(int axis) const;

    // Dense LocalProjector carrying (U'_i, Pi); certificate is epsilon.
    LocalProjector materialize() const;
};

// Dilation with phases left trivial (pure Naimark statement).
Dilation naimark_dilate(const PovmSystem& povm);

// Map F. Delta defaults to sqrt(d * epsilon); throws out_of_regime when the
// resulting Delta >= 2 and invalid_input for epsilon = 0 (callers embed
// trivially in that case).
Dilation map_F(const SoftTorus& t, const PovmOptions& opts = {});

// ||polar(K_i) - U_i|| maximized over axes, the G(F(t)) round trip evaluated
// through the canonical identification of range(Pi) with the input space.
double roundtrip_GF(const SoftTorus& t, const Dilation& dil);
double roundtrip_GF(const SoftTorus& t, const PovmOptions& opts = {});

// sum_c (m_i Delta)^2 E_c, for the diagnostics around the X'^2 comparison.
Mat second_moment(const Dilation& dil, int axis, bool y_axis);

// Compressed Pi X' Pi restricted to the input space: sum_c m_i Delta E_c.
Mat first_moment(const Dilation& dil, int axis, bool y_axis);

}  // namespace qmnum::povm
