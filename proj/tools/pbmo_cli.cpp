#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <variant>

#include <CLI11.hpp>
#include <json.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <openssl/evp.h>

#include "pbmo/pbmo.hpp"

namespace fs = std::filesystem;
using namespace pbmo;

namespace {

std::vector<std::string> const kCommands{"qh",    "cover",        "chain",   "pbmo",     "jn",        "global-jn",    "expint",
                                         "solve", "verify-super", "lemma62", "log-pbmo", "integrability"};

std::map<std::string, std::set<std::string>> const kKeys{
    {"run", {"seed"}},
    {"domain", {"kind", "h", "center", "radius", "lo", "hi", "side", "a", "b", "file", "origin"}},
    {"cylinder", {"T", "delta", "sigma", "p"}},
    {"field", {"kind", "value", "file", "tstep"}},
    {"qh", {"root", "targets", "cells"}},
    {"cover", {"beta", "cap"}},
    {"chain", {"beta", "alpha", "alpha_prime", "delta", "starts", "calibration"}},
    {"pbmo", {"sigmas", "max_levels", "random_count", "centers_per_axis", "time_centers"}},
    {"jn", {"min_side_cells", "layers", "random_count", "max_levels", "floor_cells", "min_pass"}},
    {"global-jn", {"z", "q", "scale", "max_residual"}},
    {"expint", {"gamma"}},
    {"solve", {"h", "tstep", "safety", "eps_reg", "initial", "boundary", "layers", "write_field"}},
    {"verify-super", {"count", "r_lo", "r_hi", "rt_lo", "rt_hi", "rel_tol"}},
    {"lemma62", {"family_h", "max_levels", "slack", "min_pass"}},
    {"log-pbmo", {"levels", "rel_tol"}},
    {"integrability", {"delta", "eps_floor", "rel_tol", "eps_min"}},
};

std::string g17(double v) { return fmt::format("{:.17g}", v); }

double parse_number(std::string const& text, std::string const& where) {
    auto const one = [&](std::string const& s) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (std::exception const&) {
            used = 0;
        }
        if (s.empty() || used != s.size()) throw InputError(fmt::format("{}: '{}' is not a number", where, text));
        return v;
    };
    auto const slash = text.find('/');
    if (slash == std::string::npos) return one(text);
    return one(text.substr(0, slash)) / one(text.substr(slash + 1));
}

std::vector<double> parse_list(std::string const& text, std::string const& where, char sep = ',') {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, sep)) v.push_back(parse_number(item, where));
    return v;
}

class Config {
public:
    Config(fs::path const& path, std::string const& text) : dir_(path.parent_path()) {
        std::istringstream in(text);
        try {
            boost::property_tree::ini_parser::read_ini(in, tree_);
        } catch (boost::property_tree::ini_parser_error const& e) {
            throw InputError(fmt::format("malformed config {}: {}", path.string(), e.message()));
        }
        for (auto const& [section, body] : tree_) {
            auto const known = kKeys.find(section);
            if (known == kKeys.end() || body.empty()) throw InputError(fmt::format("config: unknown section [{}]", section));
            for (auto const& kv : body)
                if (!known->second.count(kv.first)) throw InputError(fmt::format("config: unknown key '{}' in [{}]", kv.first, section));
        }
    }

    std::optional<std::string> get(std::string const& s, std::string const& k) const {
        auto const v = tree_.get_optional<std::string>(boost::property_tree::ptree::path_type(s + "/" + k, '/'));
        if (!v) return std::nullopt;
        return *v;
    }
    std::string str(std::string const& s, std::string const& k, std::string const& def) const { return get(s, k).value_or(def); }
    double num(std::string const& s, std::string const& k, double def) const {
        auto const v = get(s, k);
        return v ? parse_number(*v, fmt::format("[{}] {}", s, k)) : def;
    }
    double num(std::string const& s, std::string const& k) const {
        auto const v = get(s, k);
        if (!v) throw InputError(fmt::format("config: missing key '{}' in [{}]", k, s));
        return parse_number(*v, fmt::format("[{}] {}", s, k));
    }
    std::size_t count(std::string const& s, std::string const& k, std::size_t def) const {
        double const v = num(s, k, static_cast<double>(def));
        if (!(v >= 0.0) || v != std::floor(v)) throw InputError(fmt::format("[{}] {} must be a nonnegative integer", s, k));
        return static_cast<std::size_t>(v);
    }
    bool flag(std::string const& s, std::string const& k, bool def) const {
        auto const v = get(s, k);
        if (!v) return def;
        if (*v == "true" || *v == "1") return true;
        if (*v == "false" || *v == "0") return false;
        throw InputError(fmt::format("[{}] {} must be true or false", s, k));
    }
    Point point(std::string const& s, std::string const& k, Point def) const {
        auto const v = get(s, k);
        if (!v) return def;
        auto const xs = parse_list(*v, fmt::format("[{}] {}", s, k));
        if (xs.empty() || xs.size() > 2) throw InputError(fmt::format("[{}] {} must be x or x,y", s, k));
        return {xs[0], xs.size() == 2 ? xs[1] : 0.0};
    }
    fs::path file(std::string const& s, std::string const& k) const {
        auto const v = get(s, k);
        if (!v) throw InputError(fmt::format("config: missing key '{}' in [{}]", k, s));
        fs::path p(*v);
        if (p.is_relative()) p = dir_ / p;
        if (!fs::exists(p)) throw InputError(fmt::format("[{}] {}: file {} does not exist", s, k, p.string()));
        return p;
    }

private:
    fs::path dir_;
    boost::property_tree::ptree tree_;
};

std::string sha256_hex(std::string const& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) throw ComputationError("sha256 failed");
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
    return hex;
}

void write_atomic(fs::path const& path, std::string const& content) {
    fs::path const tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError("cannot write " + tmp.string());
        out << content;
        if (!out) throw ComputationError("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

using Stationary = decltype(stationary_field(nullptr, TimeGrid{}, {}));

struct Field {
    std::shared_ptr<const SpatialDomain> dom;
    std::optional<std::vector<double>> spatial;   ///< set for time-independent fields
    std::optional<std::variant<GridFunction, Stationary>> u;

    template <class Fn>
    decltype(auto) visit(Fn&& fn) const { return std::visit(std::forward<Fn>(fn), *u); }
};

struct GlobalFit {
    double B = 0.0, c = 0.0;
};

class Runner {
public:
    Runner(Config cfg, std::uint64_t seed, double refine, fs::path out) : cfg_(std::move(cfg)), seed_(seed), refine_(refine), out_(std::move(out)) {
        T_ = cfg_.num("cylinder", "T", 1.0);
        p_ = cfg_.num("cylinder", "p", 2.0);
        sigma_ = cfg_.num("cylinder", "sigma", 1.0);
        delta_ = cfg_.num("cylinder", "delta", 0.05);
        if (!(T_ > 0.0)) throw InputError("[cylinder] T must be positive");
        if (!(p_ > 1.0)) throw InputError("[cylinder] p must exceed 1");
        if (!(sigma_ >= 1.0)) throw InputError("[cylinder] sigma must be at least 1");
        if (!(refine_ >= 1.0)) throw InputError("--refine must be at least 1");
    }

    bool run(std::string const& cmd) {
        files_.clear();
        auto const t0 = std::chrono::steady_clock::now();
        bool const ok = dispatch(cmd);
        double const secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        ops_.push_back({{"operation", cmd}, {"files", files_}, {"seconds", secs}, {"verdict", ok ? "pass" : "fail"}});
        std::cerr << fmt::format("{}: {} ({:.2f} s)\n", cmd, ok ? "pass" : "fail", secs);
        return ok;
    }

    nlohmann::json const& operations() const { return ops_; }

private:
    bool dispatch(std::string const& cmd) {
        if (cmd == "qh") return qh();
        if (cmd == "cover") return cover();
        if (cmd == "chain") return chain();
        if (cmd == "pbmo") return pbmo();
        if (cmd == "jn") return jn();
        if (cmd == "global-jn") return global();
        if (cmd == "expint") return expint();
        if (cmd == "solve") return solve();
        if (cmd == "verify-super") return verify_super();
        if (cmd == "lemma62") return lemma62();
        if (cmd == "log-pbmo") return log_pbmo();
        if (cmd == "integrability") return integrability();
        throw InputError("unknown subcommand '" + cmd + "'");
    }

    void emit(std::string const& name, std::string const& content) {
        write_atomic(out_ / name, content);
        files_.push_back(name);
    }

    SpatialDomain make_domain(double h) const {
        std::string const kind = cfg_.str("domain", "kind", "disk");
        if (!(h > 0.0)) throw InputError("grid spacing must be positive");
        if (kind == "disk") return domains::disk(cfg_.point("domain", "center", {0, 0}), cfg_.num("domain", "radius", 1.0), h);
        if (kind == "box") return domains::box(cfg_.point("domain", "lo", {0, 0}), cfg_.point("domain", "hi", {1, 1}), h);
        if (kind == "lshape") return domains::lshape(cfg_.num("domain", "side", 1.0), h);
        if (kind == "interval") return domains::interval(cfg_.num("domain", "a", 0.0), cfg_.num("domain", "b", 1.0), h);
        if (kind == "mask") {
            SpatialDomain const m = read_mask_file(cfg_.file("domain", "file").string(), cfg_.point("domain", "origin", {0, 0}));
            double const k = std::round(m.h() / h);
            if (!(k >= 1.0) || std::abs(k * h - m.h()) > 1e-9 * m.h()) throw InputError("mask domains refine only by integer factors of the mask spacing");
            return k == 1.0 ? m : m.refined(static_cast<std::size_t>(k));
        }
        throw InputError("[domain] kind must be disk, box, lshape, interval or mask");
    }

    double base_h() const {
        if (cfg_.str("domain", "kind", "disk") == "mask" && !cfg_.get("domain", "h"))
            return read_mask_file(cfg_.file("domain", "file").string()).h();
        return cfg_.num("domain", "h");
    }

    std::shared_ptr<const SpatialDomain> domain() {
        if (!dom_) dom_ = std::make_shared<const SpatialDomain>(make_domain(base_h() / refine_));
        return dom_;
    }

    DistanceField const& distance() {
        if (!dist_) dist_ = distance_to_boundary(*domain());
        return *dist_;
    }

    QHResult const& qh_run() {
        if (!qh_) qh_ = quasihyperbolic_distances(*domain(), distance(), cfg_.point("qh", "root", {0, 0}));
        return *qh_;
    }

    Field const& field() {
        if (field_) return *field_;
        Field f;
        std::string const kind = cfg_.str("field", "kind", "log_distance");
        double const tstep = cfg_.num("field", "tstep", 1.0 / 64);
        if (kind == "log_solution") {
            GridFunction const& s = solution(solve_h()).f;
            f.dom = s.domain_ptr();
            f.u.emplace(negative_log(s));
        } else {
            f.dom = domain();
            if (kind == "log_distance") {
                f.spatial = log_distance_values(*f.dom, distance());
            } else if (kind == "constant") {
                f.spatial = std::vector<double>(f.dom->cell_count(), cfg_.num("field", "value", 0.0));
            } else if (kind == "file") {
                GridFunction g = read_grid_function_file(cfg_.file("field", "file").string(), f.dom);
                if (std::abs(g.time().horizon() - T_) > 1e-9 * T_) throw InputError("field file horizon differs from [cylinder] T");
                f.u.emplace(std::move(g));
            } else {
                throw InputError("[field] kind must be log_distance, constant, file or log_solution");
            }
            if (f.spatial) f.u.emplace(stationary_field(f.dom, TimeGrid::covering(T_, tstep), *f.spatial));
        }
        field_.emplace(std::move(f));
        return *field_;
    }

    FamilyOptions pbmo_family_options() const {
        FamilyOptions o;
        o.max_levels = cfg_.count("pbmo", "max_levels", 4);
        o.random_count = cfg_.count("pbmo", "random_count", 64);
        o.centers_per_axis = cfg_.count("pbmo", "centers_per_axis", 8);
        o.time_centers = cfg_.count("pbmo", "time_centers", 6);
        o.seed = seed_;
        return o;
    }

    // -- geometry ------------------------------------------------------------

    bool qh() {
        SpatialDomain const& d = *domain();
        QHResult const& q = qh_run();
        QHBCFit const fit = fit_qhbc(d, distance(), q);
        Point const z = d.center(q.source);
        if (cfg_.flag("qh", "cells", true)) {
            std::string s = d.dim() == 2 ? "x,y,d,k\n" : "x,d,k\n";
            for (std::size_t c : d.interior_cells()) {
                Point const x = d.center(c);
                s += d.dim() == 2 ? fmt::format("{},{},{},{}\n", g17(x[0]), g17(x[1]), g17(distance()[c]), g17(q.k[c]))
                                  : fmt::format("{},{},{}\n", g17(x[0]), g17(distance()[c]), g17(q.k[c]));
            }
            emit("qh_cells.csv", s);
        }
        if (auto const targets = cfg_.get("qh", "targets")) {
            std::string s = "x,y,k\n";
            std::stringstream ss(*targets);
            std::string item;
            while (std::getline(ss, item, ';')) {
                auto const xs = parse_list(item, "[qh] targets");
                if (xs.empty() || xs.size() > 2) throw InputError("[qh] targets must be points x,y separated by ';'");
                Point const x{xs[0], xs.size() == 2 ? xs[1] : 0.0};
                s += fmt::format("{},{},{}\n", g17(x[0]), g17(x[1]), g17(q.k[d.locate(x)]));
            }
            emit("qh_targets.csv", s);
        }
        emit("qh_summary.csv", fmt::format("root_x,root_y,q,K,holds,nu\n{},{},{},{},{},{}\n", g17(z[0]), g17(z[1]), g17(fit.q), g17(fit.K),
                                           fit.holds ? 1 : 0, g17(fit.nu)));
        return true;
    }

    bool cover() {
        SpatialDomain const& d = *domain();
        SpatialCover const c = whitney_cover(d, distance(), cfg_.num("cover", "beta", 0.5), cfg_.num("cover", "cap", 1.0));
        std::string s = "cx,cy,side\n";
        for (Cube const& q : c.cubes) s += fmt::format("{},{},{}\n", g17(q.center[0]), g17(q.center[1]), g17(q.side));
        emit("cover.csv", s);
        emit("cover_summary.csv", fmt::format("cubes,max_overlap,mean_overlap,uncovered\n{},{},{},{}\n", c.cubes.size(), c.max_overlap,
                                              g17(c.mean_overlap), c.uncovered));
        return c.uncovered == 0;
    }

    Point random_interior_point(CounterRng& rng) {
        SpatialDomain const& d = *domain();
        auto const& cells = d.interior_cells();
        auto const i = std::min(cells.size() - 1, static_cast<std::size_t>(rng.uniform() * static_cast<double>(cells.size())));
        return d.center(cells[i]);
    }

    bool chain() {
        SpatialDomain const& d = *domain();
        QHResult const& q = qh_run();
        double const qlen = max_geodesic_length(d, q);
        ChainParams prm;
        prm.beta = cfg_.num("chain", "beta", 0.5);
        prm.alpha = cfg_.num("chain", "alpha", 0.01);
        prm.alpha_prime = cfg_.num("chain", "alpha_prime", prm.alpha);
        prm.p = p_;
        prm.T = T_;
        std::optional<double> delta;
        if (auto const v = cfg_.get("chain", "delta"); v && *v != "auto") delta = parse_number(*v, "[chain] delta");
        if (delta && !(*delta * std::pow(qlen, p_) < T_))
            throw InputError(fmt::format("chain: delta q^p = {} must stay below T = {}", *delta * std::pow(qlen, p_), T_));

        CounterRng cal = CounterRng(seed_).split(0xc4a1);
        std::vector<Chain> sweep;
        for (std::size_t i = 0, n = cfg_.count("chain", "calibration", 40); i < n; ++i)
            sweep.push_back(build_chain({random_interior_point(cal), cal.uniform(0.5 * T_, T_)}, d, distance(), q, prm, qlen));
        calibrate(prm, sweep, qlen);
        prm.delta = delta ? *delta : minimal_delta(prm);
        if (!(prm.delta * std::pow(qlen, p_) < T_))
            throw InputError(fmt::format("chain: calibrated delta q^p = {} is not below T = {}", prm.delta * std::pow(qlen, p_), T_));

        CounterRng rng = CounterRng(seed_).split(0xc4a2);
        std::string s = "start,x,y,t,links,k_xz,inclusion_ok,min_overlap,displacement,displacement_bound,ratio,comparable_ok,valid\n";
        bool all = true;
        double c0 = kInf, C = 0.0;
        std::size_t incl = 0, disp = 0;
        std::size_t const starts = cfg_.count("chain", "starts", 100);
        for (std::size_t i = 0; i < starts; ++i) {
            ParabolicPoint const x{random_interior_point(rng), rng.uniform(prm.delta * std::pow(qlen, p_), T_)};
            Chain const c = build_chain(x, d, distance(), q, prm, qlen);
            ChainCertificate const cert = verify_chain(c, d, distance(), prm, qlen);
            all = all && cert.valid();
            incl += cert.inclusion_ok;
            disp += cert.displacement_ok;
            c0 = std::min(c0, cert.min_overlap_ratio);
            C = std::max(C, cert.ratio);
            s += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}\n", i, g17(x.x[0]), g17(x.x[1]), g17(x.t), cert.links, g17(c.k_xz),
                             cert.inclusion_ok ? 1 : 0, g17(cert.min_overlap_ratio), g17(cert.displacement), g17(cert.displacement_bound),
                             g17(cert.ratio), cert.comparable_ok ? 1 : 0, cert.valid() ? 1 : 0);
        }
        emit("chains.csv", s);
        emit("chain_summary.csv",
             fmt::format("q,N,eta,delta,starts,inclusion_pass,displacement_pass,min_overlap,max_ratio\n{},{},{},{},{},{},{},{},{}\n", g17(qlen),
                         g17(prm.N), g17(prm.eta), g17(prm.delta), starts, incl, disp, g17(c0), g17(C)));
        return all;
    }

    // -- oscillation and John-Nirenberg ---------------------------------------

    bool pbmo() {
        Field const& f = field();
        auto const family = rectangle_family(*f.dom, T_, p_, pbmo_family_options());
        std::vector<double> sigmas{sigma_};
        if (auto const v = cfg_.get("pbmo", "sigmas")) sigmas = parse_list(*v, "[pbmo] sigmas");
        std::string s = "sigma,value,candidates,evaluated,x,y,t,L\n";
        std::optional<double> base;
        std::vector<std::pair<double, double>> values;
        for (double sg : sigmas) {
            SeminormEstimate const e = f.visit([&](auto const& u) { return pbmo_seminorm(u, family, sg); });
            ParabolicRectangle const r = e.argmax.value_or(ParabolicRectangle(f.dom->dim(), {0, 0}, 0.0, 1.0, p_));
            s += fmt::format("{},{},{},{},{},{},{},{}\n", g17(sg), g17(e.value), e.candidates, e.evaluated, g17(r.center()[0]), g17(r.center()[1]),
                             g17(r.t()), g17(r.side()));
            if (sg == 1.0) base = e.value;
            values.emplace_back(sg, e.value);
        }
        emit("pbmo.csv", s);
        if (base) {
            std::string n = "sigma,seminorm_1,seminorm_sigma,ratio\n";
            for (auto const& [sg, v] : values) {
                if (sg == 1.0) continue;
                double const ratio = v == 0.0 ? (*base == 0.0 ? 1.0 : kInf) : *base / v;
                n += fmt::format("{},{},{},{}\n", g17(sg), g17(*base), g17(v), g17(ratio));
            }
            emit("norm_equivalence.csv", n);
        }
        return true;
    }

    bool jn() {
        Field const& f = field();
        SpatialDomain const& d = *f.dom;
        FamilyOptions o;
        o.random_count = cfg_.count("jn", "random_count", 200);
        o.max_levels = cfg_.count("jn", "max_levels", 6);
        o.seed = seed_;
        double const min_side = cfg_.num("jn", "min_side_cells", 48.0) * d.h();
        double const layers = cfg_.num("jn", "layers", 2.0);
        double const floor = cfg_.num("jn", "floor_cells", 10.0);
        auto const family = f.visit([&](auto const& u) { return admissible_family(u, rectangle_family(d, T_, p_, o), sigma_); });
        std::string s = "x,y,t,L,osc,a,plus_B,plus_residual,minus_B,minus_residual,pass\n";
        std::size_t tested = 0, passed = 0, skipped = 0;
        auto const fit_cells = [](std::optional<JNFit> const& fit) {
            return fit ? fmt::format("{},{}", g17(fit->B), g17(fit->residual)) : std::string(",");
        };
        for (ParabolicRectangle const& r : family) {
            if (r.side() < min_side) continue;
            LocalJN j;
            bool ok = false;
            try {
                if (f.spatial) {
                    j = local_jn(stationary_field(f.dom, TimeGrid::covering(T_, fragment_time_step(r.side(), p_, layers)), *f.spatial), r,
                                 SigmaCheck{sigma_, T_}, 0.0, floor);
                } else {
                    j = f.visit([&](auto const& u) { return local_jn(u, r, SigmaCheck{sigma_, T_}, 0.0, floor); });
                }
                ok = j.plus_fit || j.minus_fit;
                for (auto const& fit : {j.plus_fit, j.minus_fit})
                    if (fit) ok = ok && fit->B > 0.0 && fit->residual <= 0.5;
            } catch (ComputationError const&) {
                ok = false;
            } catch (InputError const&) {
                ++skipped;
                continue;
            }
            ++tested;
            passed += ok;
            s += fmt::format("{},{},{},{},{},{},{},{},{}\n", g17(r.center()[0]), g17(r.center()[1]), g17(r.t()), g17(r.side()), g17(j.osc.value),
                             g17(j.osc.a), fit_cells(j.plus_fit), fit_cells(j.minus_fit), ok ? 1 : 0);
        }
        double const fraction = tested ? static_cast<double>(passed) / static_cast<double>(tested) : 0.0;
        double const min_pass = cfg_.num("jn", "min_pass", 0.0);
        emit("jn_local.csv", s);
        emit("jn_summary.csv", fmt::format("tested,skipped,passed,fraction,min_pass\n{},{},{},{},{}\n", tested, skipped, passed, g17(fraction), g17(min_pass)));
        return fraction >= min_pass;
    }

    double geodesic_bound() {
        if (auto const v = cfg_.get("global-jn", "q"); v && *v != "auto") return parse_number(*v, "[global-jn] q");
        return max_geodesic_length(*domain(), qh_run());
    }

    bool global() { return field().visit([&](auto const& u) { return global_on(u); }); }

    template <SpaceTimeField F>
    bool global_on(F const& u) {
        Field const& f = field();
        Point const z = cfg_.point("global-jn", "z", {0, 0});
        double const q = geodesic_bound();
        double scale = cfg_.num("global-jn", "scale", 0.0);
        if (!(scale > 0.0)) scale = pbmo_seminorm(u, rectangle_family(*f.dom, T_, p_, pbmo_family_options()), 1.0).value;
        double const max_res = cfg_.num("global-jn", "max_residual", 0.5);
        std::string s = "variant,A,B,residual,c,delta,q,scale,reference_L\n";
        bool ok = true;
        for (GlobalVariant v : {GlobalVariant::Cylinder, GlobalVariant::Rectangle}) {
            GlobalJN const g = global_jn(u, z, q, delta_, p_, scale, v);
            bool const cyl = v == GlobalVariant::Cylinder;
            s += fmt::format("{},{},{},{},{},{},{},{},{}\n", cyl ? "cylinder" : "rectangle", g17(g.fit.A), g17(g.fit.B), g17(g.fit.residual), g17(g.c),
                             g17(delta_), g17(q), g17(scale), g17(g.reference.side()));
            if (cyl) {
                std::ostringstream dist;
                write_distribution_csv(dist, g.samples);
                emit("global_jn_distribution.csv", dist.str());
                ok = g.fit.B > 0.0 && g.fit.residual <= max_res;
                global_fit_ = GlobalFit{g.fit.B, g.c};
            }
        }
        emit("global_jn.csv", s);
        return ok;
    }

    bool expint() {
        if (!global_fit_) global();
        files_.clear();
        double gamma = cfg_.num("expint", "gamma", 0.0);
        if (!(gamma > 0.0)) gamma = 0.5 * global_fit_->B;
        std::string s = "sign,gamma,c,delta,integral,layer_cake,base_measure\n";
        bool ok = true;
        for (Sign sg : {Sign::Plus, Sign::Minus}) {
            IntegrabilityReport const r = field().visit([&](auto const& u) { return exp_integral(u, delta_, gamma, global_fit_->c, sg); });
            ok = ok && std::isfinite(r.integral);
            s += fmt::format("{},{},{},{},{},{},{}\n", sg == Sign::Plus ? "plus" : "minus", g17(gamma), g17(r.c), g17(delta_), g17(r.integral),
                             g17(r.layer_cake), g17(r.base_measure));
        }
        emit("expint.csv", s);
        return ok;
    }

    // -- PDE -------------------------------------------------------------------

    double solve_h() const { return cfg_.num("solve", "h", base_h()) / refine_; }

    SupersolutionField const& solution(double h) {
        auto const it = solutions_.find(h);
        if (it != solutions_.end()) return it->second;
        auto const dom = std::make_shared<const SpatialDomain>(make_domain(h));
        int const n = dom->dim();
        SpaceTimeData const init = parse_boundary(cfg_.str("solve", "initial", "exact:heat_kernel"), n);
        SpaceTimeData const bnd = parse_boundary(cfg_.str("solve", "boundary", "exact:heat_kernel"), n);
        SchemeParams s;
        std::string const policy = cfg_.str("solve", "tstep", "0");
        s.tstep = policy.rfind("h2*", 0) == 0 ? parse_number(policy.substr(3), "[solve] tstep") * h * h : parse_number(policy, "[solve] tstep");
        s.safety = cfg_.num("solve", "safety", 0.9);
        s.eps_reg = cfg_.num("solve", "eps_reg", s.eps_reg);
        std::size_t const layers = cfg_.count("solve", "layers", 512);
        s.output = TimeGrid(layers, T_ / static_cast<double>(layers));
        return solutions_.emplace(h, solve_model_equation(dom, p_, init, bnd, s)).first->second;
    }

    bool solve() {
        double const h = solve_h();
        SupersolutionField const& s = solution(h);
        std::string const init = cfg_.str("solve", "initial", "exact:heat_kernel"), bnd = cfg_.str("solve", "boundary", "exact:heat_kernel");
        std::string err;
        if (init == bnd && init.rfind("exact:", 0) == 0) {
            SpaceTimeData const exact = parse_boundary(init, s.f.domain().dim());
            double e = 0.0;
            for (std::size_t it = 0; it < s.f.time().nt; ++it)
                for (std::size_t c : s.f.domain().interior_cells())
                    e = std::max(e, std::abs(s.f(c, it) - exact(s.f.domain().center(c), s.f.time().center(it))));
            err = g17(e);
        }
        emit("solve_summary.csv", fmt::format("h,p,T,layers,steps,rejections,gamma_low,max_tstep,max_error\n{},{},{},{},{},{},{},{},{}\n", g17(h), g17(p_),
                                              g17(T_), s.f.time().nt, s.steps, s.rejections, g17(s.gamma_low), g17(s.max_tstep), err));
        if (cfg_.flag("solve", "write_field", false)) {
            std::ostringstream out;
            write_grid_function(out, s.f);
            emit("solution.csv", out.str());
        }
        return true;
    }

    bool verify_super() {
        BumpFamily fam;
        fam.count = cfg_.count("verify-super", "count", fam.count);
        fam.r_lo = cfg_.num("verify-super", "r_lo", fam.r_lo);
        fam.r_hi = cfg_.num("verify-super", "r_hi", fam.r_hi);
        fam.rt_lo = cfg_.num("verify-super", "rt_lo", fam.rt_lo);
        fam.rt_hi = cfg_.num("verify-super", "rt_hi", fam.rt_hi);
        fam.rel_tol = cfg_.num("verify-super", "rel_tol", fam.rel_tol);
        fam.seed = seed_;
        SupersolutionVerdict const v = verify_supersolution(solution(solve_h()).f, p_, fam, &std::cerr);
        std::string s = "x,y,t,r,rt,value,mass,tol,pass\n";
        for (BumpResult const& b : v.bumps)
            s += fmt::format("{},{},{},{},{},{},{},{},{}\n", g17(b.support.center[0]), g17(b.support.center[1]), g17(b.support.t_center),
                             g17(b.support.half), g17(b.support.t_half), g17(b.value), g17(b.mass), g17(b.tol), b.pass ? 1 : 0);
        emit("verify_super.csv", s);
        emit("verify_super_summary.csv",
             fmt::format("bumps,skipped,min_value,pass\n{},{},{},{}\n", v.bumps.size(), v.skipped, g17(v.min_value), v.pass ? 1 : 0));
        return v.pass;
    }

    std::vector<ParabolicRectangle> pde_family() const {
        FamilyOptions o;
        o.max_levels = cfg_.count("lemma62", "max_levels", 3);
        o.seed = seed_;
        return rectangle_family(make_domain(cfg_.num("lemma62", "family_h", 1.0 / 16)), T_, p_, o);
    }

    bool lemma62() {
        double const slack = cfg_.num("lemma62", "slack", 0.2), min_pass = cfg_.num("lemma62", "min_pass", 0.9);
        auto const reports = lemma62_check(solution(solve_h()).f, pde_family(), sigma_, p_, slack);
        std::string s = "x,y,t,L,beta,c_prime,exponent_minus,exponent_plus,C,exponent,vacuous,pass\n";
        std::size_t passed = 0;
        auto const opt = [](std::optional<double> const& v) { return v ? g17(*v) : std::string(); };
        for (Lemma62Report const& r : reports) {
            passed += r.pass;
            s += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", g17(r.rect.center()[0]), g17(r.rect.center()[1]), g17(r.rect.t()),
                             g17(r.rect.side()), g17(r.beta), g17(r.c_prime), opt(r.exponent_minus), opt(r.exponent_plus), g17(r.C), g17(r.exponent),
                             r.vacuous ? 1 : 0, r.pass ? 1 : 0);
        }
        double const fraction = reports.empty() ? 0.0 : static_cast<double>(passed) / static_cast<double>(reports.size());
        emit("lemma62.csv", s);
        emit("lemma62_summary.csv", fmt::format("rectangles,passed,fraction,min_pass,threshold\n{},{},{},{},{}\n", reports.size(), passed,
                                                g17(fraction), g17(min_pass), g17(p_ - 1.0 - slack)));
        return fraction >= min_pass;
    }

    bool log_pbmo() {
        std::size_t const levels = cfg_.count("log-pbmo", "levels", 2);
        double const rel_tol = cfg_.num("log-pbmo", "rel_tol", 0.2);
        auto const family = pde_family();
        std::string s = "h,b,power_seminorm,power_evaluated,pbmo_seminorm\n";
        std::vector<double> values;
        for (std::size_t k = levels + 1; k-- > 0;) {
            double const h = solve_h() * std::exp2(static_cast<double>(k));
            LogPBMO const l = log_pbmo_check(solution(h).f, family, sigma_, p_);
            values.push_back(l.power.value);
            s += fmt::format("{},{},{},{},{}\n", g17(h), g17(log_pbmo_exponent(p_)), g17(l.power.value), l.power.evaluated, g17(l.pbmo.value));
        }
        double dev = 0.0;
        for (double v : values) dev = std::max(dev, std::abs(v / values.back() - 1.0));
        emit("log_pbmo.csv", s);
        emit("log_pbmo_summary.csv", fmt::format("levels,max_relative_change,rel_tol,stable\n{},{},{},{}\n", levels, g17(dev), g17(rel_tol),
                                                 dev <= rel_tol ? 1 : 0));
        return dev <= rel_tol;
    }

    bool integrability() {
        double const delta = cfg_.num("integrability", "delta", 0.1);
        double const eps_min = cfg_.num("integrability", "eps_min", 0.05);
        double const h = solve_h();
        GridFunction const& coarse = solution(2.0 * h).f;
        GridFunction const& fine = solution(h).f;
        GlobalIntegrability const g = global_integrability(coarse, fine, delta, cfg_.point("global-jn", "z", {0, 0}), p_,
                                                           cfg_.num("integrability", "eps_floor", 1.0 / 64), cfg_.num("integrability", "rel_tol", 0.1));
        emit("integrability.csv", fmt::format("eps,integral,integral_coarse,c,delta,stable\n{},{},{},{},{},{}\n", g17(g.eps), g17(g.integral),
                                              g17(g.integral_coarse), g17(g.c), g17(g.delta), g.stable ? 1 : 0));
        return g.stable && g.eps >= eps_min;
    }

    Config cfg_;
    std::uint64_t seed_;
    double refine_;
    fs::path out_;
    double T_ = 1.0, p_ = 2.0, sigma_ = 1.0, delta_ = 0.05;
    std::vector<std::string> files_;
    nlohmann::json ops_ = nlohmann::json::array();
    std::shared_ptr<const SpatialDomain> dom_;
    std::optional<DistanceField> dist_;
    std::optional<QHResult> qh_;
    std::optional<Field> field_;
    std::optional<GlobalFit> global_fit_;
    std::map<double, SupersolutionField> solutions_;
};

int run_cli(int argc, char** argv) {
    CLI::App app{"Numerical lab for parabolic BMO"};
    std::string command, config_path, out_dir = "out";
    std::optional<std::uint64_t> seed;
    double refine = 1.0;
    app.add_option("command", command, "qh | cover | chain | pbmo | jn | global-jn | expint | solve | verify-super | lemma62 | log-pbmo | integrability | all")
        ->required();
    app.add_option("--config", config_path, "config file")->required();
    app.add_option("--seed", seed, "overrides [run] seed");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--refine", refine, "grid refinement multiplier");
    app.set_version_flag("--version", PBMO_VERSION);
    try {
        app.parse(argc, argv);
    } catch (CLI::ParseError const& e) {
        int const code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    std::vector<std::string> commands;
    if (command == "all")
        commands = kCommands;
    else if (std::find(kCommands.begin(), kCommands.end(), command) != kCommands.end())
        commands = {command};
    else
        throw InputError("unknown subcommand '" + command + "'");

    std::ifstream in(config_path, std::ios::binary);
    if (!in) throw InputError("cannot open config " + config_path);
    std::string const text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Config cfg(config_path, text);
    std::uint64_t const s = seed ? *seed : static_cast<std::uint64_t>(cfg.count("run", "seed", 0));
    fs::create_directories(out_dir);
    Runner runner(std::move(cfg), s, refine, out_dir);
    bool ok = true;
    for (auto const& c : commands) ok = runner.run(c) && ok;

    nlohmann::json manifest{{"version", PBMO_VERSION},
                            {"command", command},
                            {"config", fs::absolute(config_path).string()},
                            {"config_hash", sha256_hex(text)},
                            {"seed", s},
                            {"refine", refine},
                            {"operations", runner.operations()}};
    write_atomic(fs::path(out_dir) / "manifest.json", manifest.dump(2) + "\n");
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (InputError const& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (ComputationError const& e) {
        std::cerr << "computation failed: " << e.what() << '\n';
        return 1;
    } catch (fs::filesystem_error const& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (std::exception const& e) {
        std::cerr << "failure: " << e.what() << '\n';
        return 1;
    }
}
