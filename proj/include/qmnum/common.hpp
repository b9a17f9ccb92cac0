#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qmnum {

using cxd = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;

// Error taxonomy: invalid_input covers precondition violations, out_of_regime
// covers parameter regimes the algorithms cannot certify, invariant_violation
// covers internal consistency failures.
struct invalid_input : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct out_of_regime : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct invariant_violation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct rank_deficient : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct not_commuting : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct generation_failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw invalid_input(msg);
}

}  // namespace qmnum
