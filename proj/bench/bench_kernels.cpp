// Timings of the OpenMP kernels against their serial references. The serial
// implementations are the ones the tests trust; this target reports the
// speedup and cross-checks that outputs match.

#include <chrono>
#include <cstdio>

#include "qmnum/bundle.hpp"
#include "qmnum/channels.hpp"
#include "qmnum/linalg.hpp"
#include "qmnum/parallel.hpp"
#include "qmnum/povm.hpp"
#include "qmnum/soft_torus.hpp"
#include "qmnum/walk.hpp"

using namespace qmnum;

namespace {

double seconds(const std::function<void()>& body) {
    auto t0 = std::chrono::steady_clock::now();
    body();
    auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(t1 - t0).count();
}

void report(const char* name, double serial, double parallel, double defect) {
    std::printf("%-28s serial %8.3fs  parallel %8.3fs  speedup %5.2fx  max|diff| %.2e\n", name,
                serial, parallel, serial / parallel, defect);
}

}  // namespace

int main() {
    std::printf("threads: %d\n", par::threads());

    {
        torus::SoftTorus t = torus::voiculescu_pair(6);
        double delta = std::sqrt(2.0 * t.epsilon);
        povm::PovmSystem ser, par_sys;
        double ts = seconds([&] { ser = povm::build_povm_serial(t, delta); });
        double tp = seconds([&] { par_sys = povm::build_povm(t, delta); });
        double defect = 0.0;
        for (Eigen::Index c = 0; c < ser.count(); ++c)
            defect = std::max(defect,
                              (ser.outcomes[static_cast<std::size_t>(c)].a -
                               par_sys.outcomes[static_cast<std::size_t>(c)].a)
                                  .cwiseAbs()
                                  .maxCoeff());
        report("build_povm (voiculescu 6)", ts, tp, defect);
    }

    {
        walk::RegularGraph g = walk::random_regular_graph(1200, 3, 11);
        walk::TwoTimeObservable obs = walk::random_pm_one(g, 3, 12);
        walk::TwoTimeResult rs{}, rp{};
        double ts = seconds([&] { rs = walk::two_time_correlation_serial(g, obs); });
        double tp = seconds([&] { rp = walk::two_time_correlation(g, obs); });
        report("two_time_correlation", ts, tp, std::abs(rs.correlation - rp.correlation));
    }

    {
        bundle::ProjectorField field = bundle::make_test_bundle(1);
        torus::LocalProjector lp = bundle::map_A(field, 8);
        bundle::ProjectorField back = bundle::map_B(lp, kPi / 4);
        bundle::ChernResult rs{}, rp{};
        double ts = seconds([&] { rs = bundle::chern_number_serial(back, 16); });
        double tp = seconds([&] { rp = bundle::chern_number(back, 16); });
        report("map_B + chern (N=8)", ts, tp, std::abs(rs.raw - rp.raw));
    }

    return 0;
}
