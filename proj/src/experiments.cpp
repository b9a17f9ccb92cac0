#include "qmnum/experiments.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>

#include "qmnum/bundle.hpp"
#include "qmnum/channels.hpp"
#include "qmnum/linalg.hpp"
#include "qmnum/mps.hpp"
#include "qmnum/parallel.hpp"
#include "qmnum/povm.hpp"
#include "qmnum/serialize.hpp"
#include "qmnum/soft_torus.hpp"
#include "qmnum/symmetry.hpp"
#include "qmnum/walk.hpp"

namespace fs = std::filesystem;

namespace qmnum::experiments {

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string csv_cell(const nlohmann::json& v) {
    if (v.is_number_float()) return fmt_double(v.get<double>());
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
    if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
    return v.get<std::string>();
}

void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<nlohmann::json>& rows) {
    std::ofstream out(path);
    for (std::size_t i = 0; i < header.size(); ++i)
        out << header[i] << (i + 1 < header.size() ? "," : "\n");
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < header.size(); ++i)
            out << csv_cell(row.at(header[i])) << (i + 1 < header.size() ? "," : "\n");
    }
}

std::uint64_t stable_hash(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t row_seed(std::uint64_t base, std::int64_t index) {
    std::uint64_t x = base + 0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(index + 1);
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ull;
    x ^= x >> 27;
    return x;
}

// Per-point checkpointed sweep: rows are deterministic functions of their
// index, so a rerun under the same resolved config resumes from the jsonl.
std::vector<nlohmann::json> run_sweep(const fs::path& dir, std::uint64_t cfg_hash,
                                      std::int64_t count,
                                      const std::function<nlohmann::json(std::int64_t)>& compute) {
    fs::path ckpt = dir / "checkpoint.jsonl";
    std::vector<nlohmann::json> rows(static_cast<std::size_t>(count));
    std::vector<char> have(static_cast<std::size_t>(count), 0);

    if (fs::exists(ckpt)) {
        std::ifstream in(ckpt);
        std::string line;
        bool valid = true;
        std::vector<nlohmann::json> parsed;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.contains("hash") || !j.contains("index")) continue;
            if (j["hash"].get<std::uint64_t>() != cfg_hash) {
                valid = false;
                break;
            }
            parsed.push_back(j);
        }
        if (valid) {
            for (auto& j : parsed) {
                std::int64_t i = j["index"].get<std::int64_t>();
                if (i >= 0 && i < count) {
                    rows[static_cast<std::size_t>(i)] = j["row"];
                    have[static_cast<std::size_t>(i)] = 1;
                }
            }
        } else {
            fs::remove(ckpt);
        }
    }

    std::vector<std::int64_t> pending;
    for (std::int64_t i = 0; i < count; ++i)
        if (!have[static_cast<std::size_t>(i)]) pending.push_back(i);

    std::ofstream out(ckpt, std::ios::app);
    const std::int64_t chunk = std::max<std::int64_t>(1, 2 * par::threads());
    for (std::size_t start = 0; start < pending.size(); start += static_cast<std::size_t>(chunk)) {
        std::size_t stop = std::min(pending.size(), start + static_cast<std::size_t>(chunk));
        par::for_each_index(static_cast<std::int64_t>(stop - start), [&](std::int64_t k) {
            std::int64_t i = pending[start + static_cast<std::size_t>(k)];
            rows[static_cast<std::size_t>(i)] = compute(i);
        });
        for (std::size_t k = start; k < stop; ++k) {
            std::int64_t i = pending[k];
            nlohmann::json rec{{"hash", cfg_hash}, {"index", i}, {"row", rows[static_cast<std::size_t>(i)]}};
            out << rec.dump() << "\n";
        }
        out.flush();
    }
    return rows;
}

double get_d(const nlohmann::json& p, const char* key) { return p.at(key).get<double>(); }
int get_i(const nlohmann::json& p, const char* key) { return p.at(key).get<int>(); }
std::string get_s(const nlohmann::json& p, const char* key) { return p.at(key).get<std::string>(); }

povm::Window window_of(const std::string& name) {
    if (name == "bump") return povm::Window::Bump;
    if (name == "hann") return povm::Window::Hann;
    throw invalid_input("unknown window: " + name);
}

symmetry::SymClass class_of(const std::string& name) {
    if (name == "none") return symmetry::SymClass::None;
    if (name == "symmetric") return symmetry::SymClass::Symmetric;
    if (name == "selfdual") return symmetry::SymClass::SelfDual;
    throw invalid_input("unknown class: " + name);
}

// ---------------------------------------------------------------------------

nlohmann::json run_voiculescu(const nlohmann::json& p, const fs::path& dir, std::uint64_t) {
    int n = get_i(p, "n");
    torus::SoftTorus t = torus::voiculescu_pair(n);
    const Eigen::Index dim = t.dim();
    cxd omega = std::polar(1.0, 2 * kPi / (double(n) * n));

    Mat braid = t.u[1].adjoint() * t.u[0].adjoint() * t.u[1] * t.u[0];
    double braid_defect = linalg::operator_norm(braid - omega * Mat::Identity(dim, dim));

    double eig_defect = 0.0;
    for (const Mat& u : t.u) {
        linalg::UnitaryEig eig = linalg::unitary_eig(u);
        std::vector<double> got, want;
        for (Eigen::Index j = 0; j < dim; ++j) {
            double a = std::arg(eig.eigenvalues(j));
            got.push_back(a < 0 ? a + 2 * kPi : a);
            want.push_back(2 * kPi * double(j) / double(dim));
        }
        std::sort(got.begin(), got.end());
        for (Eigen::Index j = 0; j < dim; ++j) {
            double diff = std::abs(got[static_cast<std::size_t>(j)] - want[static_cast<std::size_t>(j)]);
            diff = std::min(diff, 2 * kPi - diff);
            eig_defect = std::max(eig_defect, 2.0 * std::abs(std::sin(diff / 2)));
        }
    }

    std::vector<cxd> plaq = torus::plaquette_phases(n);
    double plaq_defect = 0.0;
    cxd expected = torus::plaquette_phase(n);
    for (cxd ph : plaq) plaq_defect = std::max(plaq_defect, std::abs(ph - expected));

    nlohmann::json res{{"n", n},
                       {"dimension", dim},
                       {"commutator", torus::commutator_epsilon(t)},
                       {"commutator_closed_form", std::abs(omega - 1.0)},
                       {"braid_defect", braid_defect},
                       {"eigenvalue_defect", eig_defect},
                       {"plaquette_re", expected.real()},
                       {"plaquette_im", expected.imag()},
                       {"plaquette_spread", plaq_defect}};
    std::ofstream(dir / "results.json") << res.dump(2) << "\n";
    return res;
}

nlohmann::json run_mps_decay(const nlohmann::json& p, const fs::path& dir, std::uint64_t seed) {
    int k = get_i(p, "bond_dim"), d = get_i(p, "phys_dim"), n = get_i(p, "sites");
    int seeds = get_i(p, "seeds"), sep_max = get_i(p, "sep_max");
    int site_p = get_i(p, "site_p");
    require(site_p + sep_max <= n, "mps-decay: operators run off the chain");

    std::uint64_t hash = stable_hash(p.dump() + std::to_string(seed));
    auto rows = run_sweep(dir, hash, seeds, [&](std::int64_t s) {
        std::uint64_t rs = row_seed(seed, s);
        mps::MPSChain chain = mps::build_expander_mps(k, d, n, rs);
        mps::TransferOperator top = mps::transfer_spectrum(chain);
        std::mt19937_64 rng(rs ^ 0x5bf0a8b1u);
        Mat op_a = linalg::random_hermitian(d, rng);
        Mat op_b = linalg::random_hermitian(d, rng);
        nlohmann::json out = nlohmann::json::array();
        for (int sep = 1; sep <= sep_max; ++sep) {
            mps::Interval ia{site_p, site_p}, ib{site_p + sep, site_p + sep};
            mps::CorrelationResult c = mps::connected_correlation(chain, top, op_a, ia, op_b, ib);
            double tail = 10.0 * std::pow(top.lambda, std::min(ia.first - 1, n - ib.last));
            out.push_back({{"seed", rs},
                           {"k", k},
                           {"d", d},
                           {"N", n},
                           {"P", ia.first},
                           {"Q", ia.last},
                           {"R", ib.first},
                           {"S", ib.last},
                           {"sep", sep},
                           {"value_re", c.value.real()},
                           {"value_im", c.value.imag()},
                           {"bound", c.bound},
                           {"lambda", c.lambda},
                           {"tail", tail},
                           {"hermiticity_defect", top.hermiticity_defect}});
        }
        return out;
    });

    std::vector<nlohmann::json> flat;
    int violations = 0;
    double max_lambda = 0.0, max_herm = 0.0, max_ratio = 0.0;
    for (const auto& group : rows)
        for (const auto& r : group) {
            double mag = std::hypot(r.at("value_re").get<double>(), r.at("value_im").get<double>());
            double allowed = r.at("bound").get<double>() + r.at("tail").get<double>();
            if (mag > allowed) ++violations;
            max_ratio = std::max(max_ratio, mag / allowed);
            max_lambda = std::max(max_lambda, r.at("lambda").get<double>());
            max_herm = std::max(max_herm, r.at("hermiticity_defect").get<double>());
            flat.push_back(r);
        }
    write_csv(dir / "decay.csv",
              {"seed", "k", "d", "N", "P", "Q", "R", "S", "sep", "value_re", "value_im", "bound",
               "lambda"},
              flat);
    nlohmann::json res{{"rows", flat.size()},
                       {"violations", violations},
                       {"max_ratio_to_allowed", max_ratio},
                       {"max_lambda", max_lambda},
                       {"max_hermiticity_defect", max_herm}};
    std::ofstream(dir / "results.json") << res.dump(2) << "\n";
    return res;
}

nlohmann::json run_two_interval(const nlohmann::json& p, const fs::path& dir, std::uint64_t seed) {
    int k = get_i(p, "bond_dim"), d = get_i(p, "phys_dim"), n = get_i(p, "sites");
    int seeds = get_i(p, "seeds"), sep_max = get_i(p, "sep_max");
    std::uint64_t hash = stable_hash(p.dump() + std::to_string(seed));
    auto rows = run_sweep(dir, hash, seeds, [&](std::int64_t s) {
        std::uint64_t rs = row_seed(seed, s);
        mps::MPSChain chain = mps::build_expander_mps(k, d, n, rs);
        std::mt19937_64 rng(rs ^ 0x7c83fd1u);
        Mat op_a = linalg::random_hermitian(d, rng);
        Mat op_b1 = linalg::random_hermitian(d, rng);
        Mat op_b2 = linalg::random_hermitian(d, rng);
        int mid = n / 2;
        nlohmann::json out = nlohmann::json::array();
        for (int sep = 1; sep <= sep_max; ++sep) {
            mps::Interval ia{mid, mid}, ib1{mid - sep, mid - sep}, ib2{mid + sep, mid + sep};
            if (ib1.first < 1 || ib2.last > n) break;
            mps::CorrelationResult c =
                mps::two_interval_correlation(chain, op_a, ia, op_b1, ib1, op_b2, ib2);
            out.push_back({{"seed", rs},
                           {"k", k},
                           {"d", d},
                           {"N", n},
                           {"P", ia.first},
                           {"Q", ia.last},
                           {"R", ib2.first},
                           {"S", ib2.last},
                           {"sep", sep},
                           {"value_re", c.value.real()},
                           {"value_im", c.value.imag()},
                           {"bound", c.bound},
                           {"lambda", c.lambda},
                           {"folded_lambda", c.folded_lambda}});
        }
        return out;
    });
    std::vector<nlohmann::json> flat;
    for (const auto& group : rows)
        for (const auto& r : group) flat.push_back(r);
    write_csv(dir / "two_interval.csv",
              {"seed", "k", "d", "N", "P", "Q", "R", "S", "sep", "value_re", "value_im", "bound",
               "lambda"},
              flat);
    nlohmann::json res{{"rows", flat.size()}};
    std::ofstream(dir / "results.json") << res.dump(2) << "\n";
    return res;
}

nlohmann::json run_walk_decay(const nlohmann::json& p, const fs::path& dir, std::uint64_t seed) {
    int v = get_i(p, "vertices"), dg = get_i(p, "degree"), seeds = get_i(p, "seeds");
    int tau_min_fit = get_i(p, "tau_min_fit");
    std::uint64_t hash = stable_hash(p.dump() + std::to_string(seed));
    auto rows = run_sweep(dir, hash, seeds, [&](std::int64_t s) {
        std::uint64_t rs = row_seed(seed, s);
        walk::RegularGraph g = walk::random_regular_graph(v, dg, rs);
        int gir = walk::girth(g);
        double lam2 = walk::second_eigenvalue_modulus(g);
        int tau_cap = std::max(4, gir / 3);
        std::vector<double> taus, corrs;
        nlohmann::json out = nlohmann::json::array();
        for (int tau = 1; tau <= tau_cap; ++tau) {
            walk::TwoTimeObservable obs = walk::random_pm_one(g, tau, rs ^ 0x11d3f7u);
            walk::TwoTimeResult r = walk::two_time_correlation(g, obs);
            if (tau >= tau_min_fit && tau <= std::max(tau_min_fit, gir / 3)) {
                taus.push_back(tau);
                corrs.push_back(r.correlation);
            }
            out.push_back({{"seed", rs},
                           {"V", v},
                           {"d_g", dg},
                           {"girth", gir},
                           {"tau", tau},
                           {"corr", r.correlation},
                           {"lambda2", lam2},
                           {"ties", r.tie_count}});
        }
        double expo = taus.size() >= 2 ? walk::fit_loglog_exponent(taus, corrs) : 0.0;
        for (auto& r : out) r["fit_exponent"] = expo;
        return out;
    });
    std::vector<nlohmann::json> flat;
    for (const auto& group : rows)
        for (const auto& r : group) flat.push_back(r);
    write_csv(dir / "walk.csv",
              {"seed", "V", "d_g", "girth", "tau", "corr", "lambda2", "fit_exponent"}, flat);
    nlohmann::json res{{"rows", flat.size()}};
    if (!flat.empty()) res["fit_exponent"] = flat.front().at("fit_exponent");
    std::ofstream(dir / "results.json") << res.dump(2) << "\n";
    return res;
}

nlohmann::json run_gf_roundtrip(const nlohmann::json& p, const fs::path& dir, std::uint64_t seed) {
    std::vector<int> ns = p.at("n_list").get<std::vector<int>>();
    povm::PovmOptions opts;
    opts.window = window_of(get_s(p, "window"));
    double delta_override = get_d(p, "delta_override");
    if (delta_override > 0) opts.delta_override = delta_override;
    opts.prune_threshold = get_d(p, "prune");

    std::uint64_t hash = stable_hash(p.dump() + std::to_string(seed));
    auto rows = run_sweep(dir, hash, static_cast<std::int64_t>(ns.size()), [&](std::int64_t i) {
        int n = ns[static_cast<std::size_t>(i)];
        torus::SoftTorus t = torus::voiculescu_pair(n);
        povm::Dilation dil = povm::map_F(t, opts);
        double rt = povm::roundtrip_GF(t, dil);
        return nlohmann::json{{"N", n},
                              {"dim", t.dim()},
                              {"d", t.d()},
                              {"epsilon", t.epsilon},
                              {"delta", dil.povm.delta},
                              {"outcomes", dil.povm.count()},
                              {"eps_prime", dil.epsilon},
                              {"roundtrip", rt},
                              {"completeness_defect", dil.povm.completeness_defect}};
    });
    std::vector<double> deps, rts, epsp;
    for (const auto& r : rows) {
        deps.push_back(r.at("d").get<double>() * r.at("epsilon").get<double>());
        rts.push_back(r.at("roundtrip").get<double>());
        epsp.push_back(r.at("eps_prime").get<double>());
    }
    QuarterFit fit_rt = fit_quarter_power(deps, rts);
    QuarterFit fit_ep = fit_quarter_power(deps, epsp);
    std::vector<nlohmann::json> flat(rows.begin(), rows.end());
    write_csv(dir / "roundtrip.csv",
              {"N", "dim", "d", "epsilon", "delta", "outcomes", "eps_prime", "roundtrip",
               "completeness_defect"},
              flat);
    nlohmann::json res{{"points", rows.size()},
                       {"fit_c_roundtrip", fit_rt.c},
                       {"fit_r2_roundtrip", fit_rt.r_squared},
                       {"fit_slope_roundtrip", fit_rt.free_slope},
                       {"fit_c_epsprime", fit_ep.c},
                       {"fit_r2_epsprime", fit_ep.r_squared},
                       {"fit_slope_epsprime", fit_ep.free_slope}};
    std::ofstream(dir / "results.json") << res.dump(2) << "\n";
    return res;
}

nlohmann::json run_ab_roundtrip(const nlohmann::json& p, const fs::path& dir, std::uint64_t) {
    int c = get_i(p, "c"), n_grid = get_i(p, "n"), grid = get_i(p, "grid");
    double radius = get_d(p, "radius");
    std::string sel = get_s(p, "bundle");
    if (sel.rfind("test:", 0) == 0)
        c = std::stoi(sel.substr(5));
    else if (!sel.empty())
        throw invalid_input("ab-roundtrip: bundle must be test:<c>");
    bundle::ProjectorField field = bundle::make_test_bundle(c);
    bundle::ChernResult before = bundle::chern_number(field, grid);
    torus::LocalProjector lp = bundle::map_A(field, n_grid);
    bundle::MapBOptions bopts;
    bopts.grid = std::min(grid, 12);
    bundle::ProjectorField back = bundle::map_B(lp, radius, bopts);
    bundle::ChernResult after = bundle::chern_number(back, grid);
    std::ofstream(dir / "field_in.json") << bundle::dump_field(field, 6).dump() << "\n";
    std::ofstream(dir / "field_out.json") << bundle::dump_field(back, 6).dump() << "\n";
    nlohmann::json res{{"c", c},
                       {"n", n_grid},
                       {"grid", grid},
                       {"radius", radius},
                       {"epsilon", lp.epsilon},
                       {"lipschitz", field.lipschitz},
                       {"chern_in", before.value},
                       {"chern_out", after.value},
                       {"residual_in", before.residual},
                       {"residual_out", after.residual},
                       {"rank_out", after.rank}};
    std::ofstream(dir / "results.json") << res.dump(2) << "\n";
    return res;
}

nlohmann::json run_full_pipeline(const nlohmann::json& p, const fs::path& dir, std::uint64_t) {
    int n = get_i(p, "n"), grid = get_i(p, "grid");
    double radius = get_d(p, "radius");
    povm::PovmOptions opts;
    opts.window = window_of(get_s(p, "window"));
    opts.prune_threshold = get_d(p, "prune");
    torus::SoftTorus t = torus::voiculescu_pair(n);
    povm::Dilation dil = povm::map_F(t, opts);
    bundle::PipelineDiag diag;
    bundle::ChernResult chern = bundle::chern_of_dilation(dil, radius, grid, &diag);
    nlohmann::json res{{"n", n},
                       {"grid", grid},
                       {"radius", radius},
                       {"epsilon", t.epsilon},
                       {"delta", dil.povm.delta},
                       {"outcomes", dil.povm.count()},
                       {"eps_prime", dil.epsilon},
                       {"chern", chern.value},
                       {"chern_raw", chern.raw},
                       {"residual", chern.residual},
                       {"min_top_ritz", diag.min_top_ritz},
                       {"max_bottom_estimate", diag.max_bottom_estimate},
                       {"max_subspace_residual", diag.max_subspace_residual}};
    std::ofstream(dir / "results.json") << res.dump(2) << "\n";
    return res;
}

nlohmann::json run_symmetry_pipeline(const nlohmann::json& p, const fs::path& dir,
                                     std::uint64_t seed) {
    symmetry::SymClass cls = class_of(get_s(p, "class"));
    require(cls != symmetry::SymClass::None, "symmetry-pipeline: class must not be none");
    int seeds = get_i(p, "seeds"), dim = get_i(p, "dim"), d = get_i(p, "d");
    double eta = get_d(p, "eta");

    std::uint64_t hash = stable_hash(p.dump() + std::to_string(seed));
    auto rows = run_sweep(dir, hash, seeds, [&](std::int64_t s) {
        std::uint64_t rs = row_seed(seed, s);
        torus::SoftTorus t = symmetry::random_class_torus(d, dim, cls, eta, rs);
        double din = symmetry::class_defect(t, cls);

        povm::Dilation dil = povm::map_F(t, {});
        double ddil = symmetry::class_defect(dil, cls);
        double drt = 0.0;
        for (const Mat& k : dil.k) {
            Mat u = linalg::polar(k);
            drt = std::max(drt, symmetry::symmetry_check(u, cls));
        }

        // map_G on a class local projector derived from a perturbed spectral cut
        std::mt19937_64 rng(rs ^ 0xabcdef);
        Mat h0 = linalg::random_hermitian(dim, rng);
        Mat h1 = linalg::random_hermitian(dim, rng);
        auto csym = [&](const Mat& m) {
            if (cls == symmetry::SymClass::Symmetric) return ((m + m.transpose()) / 2).eval();
            Mat z = symmetry::standard_z(dim);
            return ((m - z * m.conjugate() * z) / 2).eval();
        };
        h0 = csym(0.5 * (h0 + h0.adjoint()));
        h1 = csym(0.5 * (h1 + h1.adjoint()));
        linalg::HermitianEig e0 = linalg::hermitian_eig(h0);
        Vec ph(dim);
        for (Eigen::Index i = 0; i < dim; ++i) ph(i) = std::polar(1.0, e0.eigenvalues(i));
        Mat u_exact = e0.eigenvectors * ph.asDiagonal() * e0.eigenvectors.adjoint();
        double med = e0.eigenvalues(dim / 2);
        Mat proj = linalg::hermitian_function(
            [&](double x) { return x > med ? 1.0 : 0.0; }, (h0 + eta * h1).eval());
        torus::LocalProjector lp;
        lp.u = {u_exact};
        lp.p = proj;
        lp.epsilon = torus::locality_epsilon(lp);
        torus::MapGResult g = torus::map_G(lp);
        double dg = symmetry::class_defect(g.torus, cls);

        // symmetry-preserving dilation of a small coarse POVM from the torus
        torus::SoftTorus t4 = symmetry::random_class_torus(2, 4, cls, eta, rs ^ 0x77);
        povm::PovmSystem coarse = povm::build_povm(t4, 1.0, povm::Window::Bump);
        std::vector<Mat> elems;
        for (Eigen::Index c = 0; c < coarse.count(); ++c) elems.push_back(coarse.element(c));
        symmetry::SymmetricDilation sd = symmetry::symmetric_naimark_dilate(elems, cls);
        // ambient class defect: the self-dual form on the big space is Z (+) J-blocks
        auto ambient_defect = [&](const Mat& m) {
            if (cls == symmetry::SymClass::SelfDual)
                return linalg::operator_norm(m + sd.z_ambient * m.transpose() * sd.z_ambient);
            return symmetry::symmetry_check(m, cls);
        };
        double dpi = ambient_defect(sd.pi);
        double dq = 0.0, did = 0.0;
        for (std::size_t i = 0; i < sd.q.size(); ++i) {
            dq = std::max(dq, ambient_defect(sd.q[i]));
            Mat restricted = (sd.pi * sd.q[i] * sd.pi).topLeftCorner(4, 4);
            did = std::max(did, linalg::operator_norm(restricted - elems[i]));
        }

        return nlohmann::json{{"seed", rs},
                              {"class", get_s(p, "class")},
                              {"epsilon", t.epsilon},
                              {"defect_input", din},
                              {"defect_dilation", ddil},
                              {"defect_roundtrip", drt},
                              {"defect_mapG", dg},
                              {"defect_sym_pi", dpi},
                              {"defect_sym_q", dq},
                              {"dilation_identity_defect", did}};
    });
    std::vector<nlohmann::json> flat(rows.begin(), rows.end());
    write_csv(dir / "symmetry.csv",
              {"seed", "class", "epsilon", "defect_input", "defect_dilation", "defect_roundtrip",
               "defect_mapG", "defect_sym_pi", "defect_sym_q", "dilation_identity_defect"},
              flat);
    double worst = 0.0;
    for (const auto& r : flat)
        for (const char* key : {"defect_input", "defect_dilation", "defect_roundtrip",
                                "defect_mapG", "defect_sym_pi", "defect_sym_q"})
            worst = std::max(worst, r.at(key).get<double>());
    nlohmann::json res{{"rows", flat.size()}, {"max_class_defect", worst}};
    std::ofstream(dir / "results.json") << res.dump(2) << "\n";
    return res;
}

nlohmann::json run_matthew(const nlohmann::json& p, const fs::path& dir, std::uint64_t) {
    int n = get_i(p, "n");
    double step = get_d(p, "grid_step");
    std::vector<double> grid;
    for (double x = step; x < 1.0 - step / 2; x += step) grid.push_back(x);

    std::vector<channels::MonotoneBooleanFn> fns;
    channels::enumerate_monotone(n, [&](const channels::MonotoneBooleanFn& f) { fns.push_back(f); });

    std::vector<nlohmann::json> rows(fns.size());
    par::for_each_index(static_cast<std::int64_t>(fns.size()), [&](std::int64_t i) {
        const auto& f = fns[static_cast<std::size_t>(i)];
        channels::MatthewReport rep = channels::matthew_check(f, grid);
        channels::ComplementPairReport comp = channels::complement_pair_check(f, grid);
        std::uint64_t mask = 0;
        for (std::size_t s = 0; s < f.table.size(); ++s)
            if (f.table[s]) mask |= (1ull << s);
        rows[static_cast<std::size_t>(i)] =
            nlohmann::json{{"n", n},
                           {"function_id", mask},
                           {"constant", rep.constant},
                           {"min_ratio", rep.constant ? 1.0 : rep.min_ratio},
                           {"passed", rep.constant ? true : rep.passed},
                           {"corollary_passed", rep.constant ? true : rep.corollary_passed},
                           {"complement_pair", comp.has_complementary_pair},
                           {"max_sum_minus_one", comp.max_sum_minus_one}};
    });

    int nonconstant = 0, failed = 0, corollary_failed = 0;
    for (const auto& r : rows) {
        if (!r.at("constant").get<bool>()) {
            ++nonconstant;
            if (!r.at("passed").get<bool>()) ++failed;
            if (!r.at("corollary_passed").get<bool>()) ++corollary_failed;
        }
    }
    write_csv(dir / "matthew.csv",
              {"n", "function_id", "min_ratio", "complement_pair"}, rows);
    nlohmann::json res{{"total", rows.size()},
                       {"nonconstant", nonconstant},
                       {"failed", failed},
                       {"corollary_failed", corollary_failed}};
    std::ofstream(dir / "results.json") << res.dump(2) << "\n";
    return res;
}

nlohmann::json run_channel_bounds(const nlohmann::json& p, const fs::path& dir,
                                  std::uint64_t seed) {
    int count = get_i(p, "count"), grid = get_i(p, "grid"), refinements = get_i(p, "refinements");
    std::uint64_t hash = stable_hash(p.dump() + std::to_string(seed));
    auto rows = run_sweep(dir, hash, count, [&](std::int64_t i) {
        int env = 1 + static_cast<int>(i % 3);
        channels::QubitDecodeChannel ch = channels::random_decode(row_seed(seed, i), env);
        channels::MistakeRates mr = channels::mistake_rates(ch, grid, refinements);
        return nlohmann::json{{"id", i},
                              {"env_dim", env},
                              {"e_av", mr.average},
                              {"e_max", mr.maximum},
                              {"ratio", mr.average > 0 ? mr.maximum / mr.average : 1.0}};
    });
    std::vector<nlohmann::json> flat(rows.begin(), rows.end());
    write_csv(dir / "channels.csv", {"id", "env_dim", "e_av", "e_max", "ratio"}, flat);

    channels::MistakeRates ident = channels::mistake_rates(channels::identity_decode());
    channels::MistakeRates mixed = channels::mistake_rates(channels::depolarize_to_mixed());
    int violations = 0;
    double max_ratio = 0.0;
    for (const auto& r : flat) {
        double av = r.at("e_av").get<double>(), mx = r.at("e_max").get<double>();
        if (!(av <= mx + 1e-9 && mx <= 4 * av + 1e-9)) ++violations;
        if (av > 0) max_ratio = std::max(max_ratio, mx / av);
    }
    nlohmann::json res{{"count", count},
                       {"violations", violations},
                       {"max_ratio", max_ratio},
                       {"identity_e_av", ident.average},
                       {"identity_e_max", ident.maximum},
                       {"mixed_e_av", mixed.average},
                       {"mixed_e_max", mixed.maximum}};
    std::ofstream(dir / "results.json") << res.dump(2) << "\n";
    return res;
}

struct Registry {
    using Fn = nlohmann::json (*)(const nlohmann::json&, const fs::path&, std::uint64_t);
    std::map<std::string, std::pair<nlohmann::json, Fn>> table;
};

const Registry& registry() {
    static Registry reg = [] {
        Registry r;
        r.table["voiculescu"] = {{{"n", 3}}, &run_voiculescu};
        r.table["mps-decay"] = {{{"bond_dim", 16},
                                 {"phys_dim", 4},
                                 {"sites", 20},
                                 {"seeds", 20},
                                 {"sep_max", 8},
                                 {"site_p", 6}},
                                &run_mps_decay};
        r.table["two-interval"] = {{{"bond_dim", 8},
                                    {"phys_dim", 4},
                                    {"sites", 16},
                                    {"seeds", 5},
                                    {"sep_max", 6}},
                                   &run_two_interval};
        r.table["walk-decay"] = {{{"vertices", 2000}, {"degree", 3}, {"seeds", 1},
                                  {"tau_min_fit", 2}},
                                 &run_walk_decay};
        r.table["gf-roundtrip"] = {{{"n_list", {4, 5, 6, 7, 8, 9, 10}},
                                    {"window", "bump"},
                                    {"delta_override", 0.0},
                                    {"prune", 0.0}},
                                   &run_gf_roundtrip};
        r.table["ab-roundtrip"] = {{{"c", 1},
                                    {"n", 12},
                                    {"grid", 24},
                                    {"radius", kPi / 4},
                                    {"bundle", "test:1"}},
                                   &run_ab_roundtrip};
        r.table["full-pipeline-chern"] = {{{"n", 6},
                                           {"grid", 12},
                                           {"radius", kPi / 4},
                                           {"window", "bump"},
                                           {"prune", 1e-8}},
                                          &run_full_pipeline};
        r.table["symmetry-pipeline"] = {{{"class", "symmetric"},
                                         {"seeds", 10},
                                         {"dim", 8},
                                         {"d", 2},
                                         {"eta", 0.05}},
                                        &run_symmetry_pipeline};
        r.table["matthew"] = {{{"n", 4}, {"grid_step", 0.02}}, &run_matthew};
        r.table["channel-bounds"] = {{{"count", 100}, {"grid", 100}, {"refinements", 3}},
                                     &run_channel_bounds};
        return r;
    }();
    return reg;
}

}  // namespace

std::vector<std::string> names() {
    std::vector<std::string> out;
    for (const auto& [name, entry] : registry().table) out.push_back(name);
    return out;
}

nlohmann::json defaults(const std::string& name) {
    auto it = registry().table.find(name);
    if (it == registry().table.end()) throw invalid_input("unknown experiment: " + name);
    return it->second.first;
}

nlohmann::json resolve_params(const config::ExperimentConfig& cfg) {
    nlohmann::json resolved = defaults(cfg.name);
    for (const auto& [key, value] : cfg.params.items()) {
        if (!resolved.contains(key))
            throw invalid_input("unknown parameter '" + key + "' for experiment " + cfg.name);
        resolved[key] = value;
    }
    return resolved;
}

nlohmann::json run(const config::ExperimentConfig& cfg) {
    nlohmann::json params = resolve_params(cfg);
    if (cfg.workers > 0) par::set_threads(cfg.workers);
    fs::path dir = fs::path(cfg.out_dir) / cfg.name;
    fs::create_directories(dir);

    nlohmann::json manifest{{"experiment", cfg.name},
                            {"version", QMNUM_VERSION},
                            {"seed", cfg.seed},
                            {"workers", cfg.workers},
                            {"params", params}};
    std::ofstream(dir / "manifest.json") << manifest.dump(2) << "\n";

    auto fn = registry().table.at(cfg.name).second;
    nlohmann::json summary = fn(params, dir, cfg.seed);
    return summary;
}

QuarterFit fit_quarter_power(const std::vector<double>& x, const std::vector<double>& y) {
    require(x.size() == y.size() && x.size() >= 2, "fit_quarter_power: need >= 2 points");
    double sb = 0.0;
    int n = 0;
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] <= 0 || y[i] <= 0) continue;
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(y[i]));
        sb += ly.back() - 0.25 * lx.back();
        ++n;
    }
    require(n >= 2, "fit_quarter_power: not enough positive points");
    double b = sb / n;
    QuarterFit fit;
    fit.c = std::exp(b);
    double ss_res = 0.0, ss_tot = 0.0, mean_y = 0.0;
    for (int i = 0; i < n; ++i) mean_y += ly[static_cast<std::size_t>(i)];
    mean_y /= n;
    for (int i = 0; i < n; ++i) {
        double pred = 0.25 * lx[static_cast<std::size_t>(i)] + b;
        ss_res += (ly[static_cast<std::size_t>(i)] - pred) * (ly[static_cast<std::size_t>(i)] - pred);
        ss_tot += (ly[static_cast<std::size_t>(i)] - mean_y) * (ly[static_cast<std::size_t>(i)] - mean_y);
    }
    fit.r_squared = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        sx += lx[static_cast<std::size_t>(i)];
        sy += ly[static_cast<std::size_t>(i)];
        sxx += lx[static_cast<std::size_t>(i)] * lx[static_cast<std::size_t>(i)];
        sxy += lx[static_cast<std::size_t>(i)] * ly[static_cast<std::size_t>(i)];
    }
    fit.free_slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return fit;
}

}  // namespace qmnum::experiments
