#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <yaml-cpp/yaml.h>

#include "funnel/params.hpp"
#include "funnel/plants.hpp"
#include "funnel/sim.hpp"

namespace funnel::cli {

struct OutputSpec {
    std::string trace = "trace.csv";
    std::string events = "events.csv";
    std::string verdicts = "verdicts.txt";
    std::string summary = "summary.json";
    bool plots = true;
    double stride = 0.0;  ///< minimum time between recorded rows, 0 keeps every step
};

struct CheckSpec {
    bool membership = true;
    bool recovery = true;
    bool bounds = true;
    bool input_bound = true;
    double recovery_tol_abs = 1e-6;
    double recovery_from = 0.0;
};

/// Everything one simulation run needs. An empty initial_state means the plant's default.
struct RunConfig {
    Plant plant = MassOnCar{};
    Eigen::VectorXd initial_state;
    ControlLaw law = FunnelLaw{};
    Saturation sat = Saturation::identity();
    ReferenceSignal ref = ReferenceSignal::cosine();
    SimConfig sim;
    OutputSpec output;
    CheckSpec checks;

    ClosedLoop loop() const { return {plant, law, sat, ref}; }
    Eigen::VectorXd plant_init() const { return initial_state.size() ? initial_state : default_initial_state(plant); }
    SimConfig sim_config() const {
        SimConfig c = sim;
        c.record_stride = output.stride;
        return c;
    }
    const FunnelParams* funnel_params() const {
        const auto* f = std::get_if<FunnelLaw>(&law);
        return f ? &f->params : nullptr;
    }
};

namespace detail {

inline std::string where(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

inline YAML::Node need(const YAML::Node& n, const std::string& path, const std::string& key) {
    if (!n.IsMap()) throw ConfigInvalid(path + ": expected a mapping");
    YAML::Node v = n[key];
    if (!v) throw ConfigInvalid(where(path, key) + ": missing");
    return v;
}

inline double as_double(const YAML::Node& n, const std::string& path) {
    if (!n.IsScalar()) throw ConfigInvalid(path + ": expected a number");
    try {
        return n.as<double>();
    } catch (const YAML::Exception&) {
        throw ConfigInvalid(path + ": not a number: " + n.Scalar());
    }
}

inline double get(const YAML::Node& n, const std::string& path, const std::string& key, double def) {
    if (!n[key]) return def;
    return as_double(n[key], where(path, key));
}

inline bool get_bool(const YAML::Node& n, const std::string& path, const std::string& key, bool def) {
    if (!n[key]) return def;
    try {
        return n[key].as<bool>();
    } catch (const YAML::Exception&) {
        throw ConfigInvalid(where(path, key) + ": expected true/false");
    }
}

inline std::string get_str(const YAML::Node& n, const std::string& path, const std::string& key, const std::string& def) {
    if (!n[key]) return def;
    if (!n[key].IsScalar()) throw ConfigInvalid(where(path, key) + ": expected a string");
    return n[key].Scalar();
}

inline std::vector<double> as_list(const YAML::Node& n, const std::string& path) {
    if (n.IsScalar()) return {as_double(n, path)};
    if (!n.IsSequence()) throw ConfigInvalid(path + ": expected a list of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < n.size(); ++i) out.push_back(as_double(n[i], path + "." + std::to_string(i)));
    return out;
}

inline Eigen::VectorXd as_vector(const YAML::Node& n, const std::string& path) {
    const auto v = as_list(n, path);
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

/// A list of rows. A bare number is a 1x1 matrix.
inline Eigen::MatrixXd as_matrix(const YAML::Node& n, const std::string& path) {
    if (n.IsScalar()) return Eigen::MatrixXd::Constant(1, 1, as_double(n, path));
    if (!n.IsSequence()) throw ConfigInvalid(path + ": expected a list of rows");
    if (n.size() == 0) return {};
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < n.size(); ++i) rows.push_back(as_list(n[i], path + "." + std::to_string(i)));
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows[0].size()) throw ConfigInvalid(path + ": ragged matrix");
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    return m;
}

inline Surjection parse_surjection(const YAML::Node& n, const std::string& path) {
    if (!n) return Surjection::neg_s2_cos();
    const std::string kind = n.IsScalar() ? n.Scalar() : get_str(n, path, "kind", "neg_s2_cos");
    if (kind == "neg_s2_cos") return Surjection::neg_s2_cos();
    if (kind == "s_sin") return Surjection::s_sin();
    if (kind == "linear") {
        const double sigma = n.IsMap() ? get(n, path, "sigma", -1.0) : -1.0;
        if (sigma == 0.0) throw ConfigInvalid(path + ".sigma: must be nonzero");
        return Surjection::linear_signed(sigma);
    }
    throw ConfigInvalid(path + ".kind: unknown surjection '" + kind + "' (neg_s2_cos, s_sin, linear)");
}

inline Plant parse_plant(const YAML::Node& n) {
    const std::string kind = get_str(n, "plant", "kind", "");
    if (kind == "mass_on_car") {
        MassOnCar p;
        p.m1 = get(n, "plant", "m1", p.m1);
        p.m2 = get(n, "plant", "m2", p.m2);
        p.k = get(n, "plant", "k", p.k);
        p.d = get(n, "plant", "d", p.d);
        p.theta = get(n, "plant", "theta", p.theta);
        if (!(p.m1 > 0.0 && p.m2 > 0.0)) throw ConfigInvalid("plant: masses must be positive");
        return p;
    }
    if (kind == "linear") {
        LinearBIF b;
        const YAML::Node rs = need(n, "plant", "R");
        if (!rs.IsSequence() || rs.size() == 0) throw ConfigInvalid("plant.R: expected a non-empty list of matrices");
        for (std::size_t i = 0; i < rs.size(); ++i) b.R.push_back(as_matrix(rs[i], "plant.R." + std::to_string(i)));
        b.Gamma = as_matrix(need(n, "plant", "Gamma"), "plant.Gamma");
        const auto m = b.Gamma.rows();
        b.Q = n["Q"] ? as_matrix(n["Q"], "plant.Q") : Eigen::MatrixXd(0, 0);
        const auto q = b.Q.rows();
        b.S = n["S"] ? as_matrix(n["S"], "plant.S") : Eigen::MatrixXd::Zero(m, q);
        b.P = n["P"] ? as_matrix(n["P"], "plant.P") : Eigen::MatrixXd::Zero(q, m);
        if (q == 0) {
            b.S.resize(m, 0);
            b.P.resize(0, m);
        }
        b.eta0 = n["eta0"] ? as_vector(n["eta0"], "plant.eta0") : Eigen::VectorXd::Zero(q);
        try {
            b.check();
        } catch (const std::invalid_argument& e) {
            throw ConfigInvalid(std::string("plant: ") + e.what());
        }
        return b;
    }
    if (kind == "scalar_prototype") return ScalarPrototype{get(n, "plant", "y0", 1.0)};
    throw ConfigInvalid("plant.kind: unknown plant '" + kind + "' (mass_on_car, linear, scalar_prototype)");
}

inline ControlLaw parse_controller(const YAML::Node& n, std::size_t plant_m) {
    const std::string kind = get_str(n, "controller", "kind", "funnel");
    if (kind == "funnel") {
        FunnelParams fp;
        const double m = get(n, "controller", "m", static_cast<double>(plant_m));
        if (!(m >= 1.0) || m != std::floor(m)) throw ConfigInvalid("controller.m: must be a positive integer");
        fp.m = static_cast<std::size_t>(m);
        fp.alpha = as_list(need(n, "controller", "alpha"), "controller.alpha");
        fp.beta = as_list(need(n, "controller", "beta"), "controller.beta");
        fp.p = n["p"] ? as_list(n["p"], "controller.p") : std::vector<double>{};
        fp.psi0 = as_list(need(n, "controller", "psi0"), "controller.psi0");
        fp.surjection = parse_surjection(n["surjection"], "controller.surjection");
        return FunnelLaw{fp};
    }
    if (kind == "baseline") {
        BaselineLaw b;
        if (const YAML::Node phi = n["phi"]) {
            b.phi.a = get(phi, "controller.phi", "a", b.phi.a);
            b.phi.b = get(phi, "controller.phi", "b", b.phi.b);
            b.phi.c = get(phi, "controller.phi", "c", b.phi.c);
        }
        b.n = parse_surjection(n["surjection"], "controller.surjection");
        return b;
    }
    if (kind == "constant") return ConstantDemand{as_vector(need(n, "controller", "v"), "controller.v")};
    throw ConfigInvalid("controller.kind: unknown controller '" + kind + "' (funnel, baseline, constant)");
}

inline Saturation parse_saturation(const YAML::Node& n) {
    if (!n) return Saturation::identity();
    const std::string kind = get_str(n, "saturation", "kind", "identity");
    if (kind == "identity") return Saturation::identity();
    const double level = as_double(need(n, "saturation", "level"), "saturation.level");
    if (!(level > 0.0)) throw ConfigInvalid("saturation.level: must be positive");
    if (kind == "box") return Saturation::box(level);
    if (kind == "ball") return Saturation::ball(level);
    throw ConfigInvalid("saturation.kind: unknown saturation '" + kind + "' (identity, box, ball)");
}

inline ReferenceSignal parse_reference(const YAML::Node& n) {
    if (!n) return ReferenceSignal::zero();
    const std::string kind = get_str(n, "reference", "kind", "zero");
    if (kind == "zero") return ReferenceSignal::zero();
    if (kind == "cosine")
        return ReferenceSignal::cosine(get(n, "reference", "amplitude", 1.0), get(n, "reference", "frequency", 1.0));
    if (kind == "polynomial") return ReferenceSignal::polynomial(as_list(need(n, "reference", "coeffs"), "reference.coeffs"));
    throw ConfigInvalid("reference.kind: unknown reference '" + kind + "' (zero, cosine, polynomial)");
}

}  // namespace detail

/// Structural and cross-field checks. Parameter inequalities surface as InvalidParams.
inline void validate(const RunConfig& c) {
    c.sim_config().check();
    const std::size_t m = output_dim(c.plant);
    const std::size_t r = relative_degree(c.plant);
    if (const auto* f = std::get_if<FunnelLaw>(&c.law)) {
        const auto& fp = f->params;
        if (fp.m != m) throw ConfigInvalid("controller.m = " + std::to_string(fp.m) + " but the plant has " + std::to_string(m) + " outputs");
        if (fp.r() != r)
            throw ConfigInvalid("controller has " + std::to_string(fp.r()) + " levels but the plant has relative degree " + std::to_string(r));
        require_valid(fp);
    } else if (std::holds_alternative<BaselineLaw>(c.law)) {
        if (m != 1 || (r != 2 && r != 3)) throw ConfigInvalid("controller.kind baseline needs a single-output plant of relative degree 2 or 3");
    } else if (const auto* d = std::get_if<ConstantDemand>(&c.law)) {
        if (static_cast<std::size_t>(d->v.size()) != m) throw ConfigInvalid("controller.v: needs one entry per plant output");
    }
    if (c.initial_state.size() && static_cast<std::size_t>(c.initial_state.size()) != state_dim(c.plant))
        throw ConfigInvalid("plant.initial_state: expected " + std::to_string(state_dim(c.plant)) + " entries");
}

inline RunConfig parse_config(const YAML::Node& root) {
    if (!root.IsMap()) throw ConfigInvalid("config: expected a mapping at top level");
    RunConfig c;
    const YAML::Node plant = detail::need(root, "", "plant");
    c.plant = detail::parse_plant(plant);
    if (plant["initial_state"]) c.initial_state = detail::as_vector(plant["initial_state"], "plant.initial_state");
    c.law = detail::parse_controller(detail::need(root, "", "controller"), output_dim(c.plant));
    c.sat = detail::parse_saturation(root["saturation"]);
    c.ref = detail::parse_reference(root["reference"]);
    if (const YAML::Node s = root["sim"]) {
        c.sim.t_end = detail::get(s, "sim", "t_end", c.sim.t_end);
        c.sim.rel_tol = detail::get(s, "sim", "rel_tol", c.sim.rel_tol);
        c.sim.abs_tol = detail::get(s, "sim", "abs_tol", c.sim.abs_tol);
        c.sim.h_init = detail::get(s, "sim", "h_init", c.sim.h_init);
        c.sim.h_min = detail::get(s, "sim", "h_min", c.sim.h_min);
        c.sim.h_max = detail::get(s, "sim", "h_max", c.sim.h_max);
        c.sim.barrier_margin = detail::get(s, "sim", "barrier_margin", c.sim.barrier_margin);
        c.sim.blowup_norm = detail::get(s, "sim", "blowup_norm", c.sim.blowup_norm);
    }
    if (const YAML::Node o = root["output"]) {
        c.output.trace = detail::get_str(o, "output", "trace", c.output.trace);
        c.output.events = detail::get_str(o, "output", "events", c.output.events);
        c.output.verdicts = detail::get_str(o, "output", "verdicts", c.output.verdicts);
        c.output.summary = detail::get_str(o, "output", "summary", c.output.summary);
        c.output.plots = detail::get_bool(o, "output", "plots", c.output.plots);
        c.output.stride = detail::get(o, "output", "stride", c.output.stride);
    }
    if (const YAML::Node k = root["checks"]) {
        c.checks.membership = detail::get_bool(k, "checks", "membership", c.checks.membership);
        c.checks.recovery = detail::get_bool(k, "checks", "recovery", c.checks.recovery);
        c.checks.bounds = detail::get_bool(k, "checks", "bounds", c.checks.bounds);
        c.checks.input_bound = detail::get_bool(k, "checks", "input_bound", c.checks.input_bound);
        c.checks.recovery_tol_abs = detail::get(k, "checks", "recovery_tol_abs", c.checks.recovery_tol_abs);
        c.checks.recovery_from = detail::get(k, "checks", "recovery_from", c.checks.recovery_from);
    }
    validate(c);
    return c;
}

inline RunConfig parse_config_text(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ConfigInvalid(std::string("config: YAML syntax error: ") + e.what());
    }
    return parse_config(root);
}

inline YAML::Node load_config_file(const std::string& path) {
    try {
        return YAML::LoadFile(path);
    } catch (const YAML::BadFile&) {
        throw ConfigInvalid("config: cannot read " + path);
    } catch (const YAML::Exception& e) {
        throw ConfigInvalid(std::string("config: YAML syntax error: ") + e.what());
    }
}

namespace detail {

inline void emit_vector(YAML::Emitter& out, const Eigen::VectorXd& v) {
    out << YAML::Flow << YAML::BeginSeq;
    for (Eigen::Index i = 0; i < v.size(); ++i) out << v(i);
    out << YAML::EndSeq;
}

inline void emit_list(YAML::Emitter& out, const std::vector<double>& v) {
    out << YAML::Flow << YAML::BeginSeq;
    for (double x : v) out << x;
    out << YAML::EndSeq;
}

inline void emit_matrix(YAML::Emitter& out, const Eigen::MatrixXd& m) {
    out << YAML::Flow << YAML::BeginSeq;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        out << YAML::Flow << YAML::BeginSeq;
        for (Eigen::Index j = 0; j < m.cols(); ++j) out << m(i, j);
        out << YAML::EndSeq;
    }
    out << YAML::EndSeq;
}

inline void emit_surjection(YAML::Emitter& out, const Surjection& n) {
    out << YAML::Key << "surjection" << YAML::Value << YAML::BeginMap;
    switch (n.kind) {
    case Surjection::Kind::neg_s2_cos: out << YAML::Key << "kind" << YAML::Value << "neg_s2_cos"; break;
    case Surjection::Kind::s_sin: out << YAML::Key << "kind" << YAML::Value << "s_sin"; break;
    case Surjection::Kind::linear_signed:
        out << YAML::Key << "kind" << YAML::Value << "linear" << YAML::Key << "sigma" << YAML::Value << n.sigma;
        break;
    }
    out << YAML::EndMap;
}

}  // namespace detail

/// Canonical YAML: every section present, fixed key order, full precision.
inline std::string serialize_config(const RunConfig& c) {
    YAML::Emitter out;
    out.SetDoublePrecision(17);
    out << YAML::BeginMap;

    out << YAML::Key << "plant" << YAML::Value << YAML::BeginMap;
    if (const auto* mc = std::get_if<MassOnCar>(&c.plant)) {
        out << YAML::Key << "kind" << YAML::Value << "mass_on_car";
        out << YAML::Key << "m1" << YAML::Value << mc->m1 << YAML::Key << "m2" << YAML::Value << mc->m2;
        out << YAML::Key << "k" << YAML::Value << mc->k << YAML::Key << "d" << YAML::Value << mc->d;
        out << YAML::Key << "theta" << YAML::Value << mc->theta;
    } else if (const auto* b = std::get_if<LinearBIF>(&c.plant)) {
        out << YAML::Key << "kind" << YAML::Value << "linear";
        out << YAML::Key << "R" << YAML::Value << YAML::BeginSeq;
        for (const auto& ri : b->R) detail::emit_matrix(out, ri);
        out << YAML::EndSeq;
        out << YAML::Key << "Gamma" << YAML::Value;
        detail::emit_matrix(out, b->Gamma);
        if (b->q() > 0) {
            out << YAML::Key << "S" << YAML::Value;
            detail::emit_matrix(out, b->S);
            out << YAML::Key << "P" << YAML::Value;
            detail::emit_matrix(out, b->P);
            out << YAML::Key << "Q" << YAML::Value;
            detail::emit_matrix(out, b->Q);
            out << YAML::Key << "eta0" << YAML::Value;
            detail::emit_vector(out, b->eta0);
        }
    } else {
        out << YAML::Key << "kind" << YAML::Value << "scalar_prototype";
        out << YAML::Key << "y0" << YAML::Value << std::get<ScalarPrototype>(c.plant).y0;
    }
    if (c.initial_state.size()) {
        out << YAML::Key << "initial_state" << YAML::Value;
        detail::emit_vector(out, c.initial_state);
    }
    out << YAML::EndMap;

    out << YAML::Key << "controller" << YAML::Value << YAML::BeginMap;
    if (const auto* f = std::get_if<FunnelLaw>(&c.law)) {
        const auto& fp = f->params;
        out << YAML::Key << "kind" << YAML::Value << "funnel";
        out << YAML::Key << "m" << YAML::Value << fp.m;
        out << YAML::Key << "alpha" << YAML::Value;
        detail::emit_list(out, fp.alpha);
        out << YAML::Key << "beta" << YAML::Value;
        detail::emit_list(out, fp.beta);
        out << YAML::Key << "p" << YAML::Value;
        detail::emit_list(out, fp.p);
        out << YAML::Key << "psi0" << YAML::Value;
        detail::emit_list(out, fp.psi0);
        detail::emit_surjection(out, fp.surjection);
    } else if (const auto* bl = std::get_if<BaselineLaw>(&c.law)) {
        out << YAML::Key << "kind" << YAML::Value << "baseline";
        out << YAML::Key << "phi" << YAML::Value << YAML::BeginMap;
        out << YAML::Key << "a" << YAML::Value << bl->phi.a << YAML::Key << "b" << YAML::Value << bl->phi.b;
        out << YAML::Key << "c" << YAML::Value << bl->phi.c << YAML::EndMap;
        detail::emit_surjection(out, bl->n);
    } else {
        out << YAML::Key << "kind" << YAML::Value << "constant" << YAML::Key << "v" << YAML::Value;
        detail::emit_vector(out, std::get<ConstantDemand>(c.law).v);
    }
    out << YAML::EndMap;

    out << YAML::Key << "saturation" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "kind" << YAML::Value << c.sat.name();
    if (c.sat.kind != Saturation::Kind::identity) out << YAML::Key << "level" << YAML::Value << c.sat.level;
    out << YAML::EndMap;

    out << YAML::Key << "reference" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "kind" << YAML::Value << c.ref.name();
    if (c.ref.kind == ReferenceSignal::Kind::cosine)
        out << YAML::Key << "amplitude" << YAML::Value << c.ref.amplitude << YAML::Key << "frequency" << YAML::Value << c.ref.frequency;
    if (c.ref.kind == ReferenceSignal::Kind::polynomial) {
        out << YAML::Key << "coeffs" << YAML::Value;
        detail::emit_list(out, c.ref.coeffs);
    }
    out << YAML::EndMap;

    out << YAML::Key << "sim" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "t_end" << YAML::Value << c.sim.t_end;
    out << YAML::Key << "rel_tol" << YAML::Value << c.sim.rel_tol;
    out << YAML::Key << "abs_tol" << YAML::Value << c.sim.abs_tol;
    out << YAML::Key << "h_init" << YAML::Value << c.sim.h_init;
    out << YAML::Key << "h_min" << YAML::Value << c.sim.h_min;
    out << YAML::Key << "h_max" << YAML::Value << c.sim.h_max;
    out << YAML::Key << "barrier_margin" << YAML::Value << c.sim.barrier_margin;
    out << YAML::Key << "blowup_norm" << YAML::Value << c.sim.blowup_norm;
    out << YAML::EndMap;

    out << YAML::Key << "output" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "trace" << YAML::Value << c.output.trace;
    out << YAML::Key << "events" << YAML::Value << c.output.events;
    out << YAML::Key << "verdicts" << YAML::Value << c.output.verdicts;
    out << YAML::Key << "summary" << YAML::Value << c.output.summary;
    out << YAML::Key << "plots" << YAML::Value << c.output.plots;
    out << YAML::Key << "stride" << YAML::Value << c.output.stride;
    out << YAML::EndMap;

    out << YAML::Key << "checks" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "membership" << YAML::Value << c.checks.membership;
    out << YAML::Key << "recovery" << YAML::Value << c.checks.recovery;
    out << YAML::Key << "bounds" << YAML::Value << c.checks.bounds;
    out << YAML::Key << "input_bound" << YAML::Value << c.checks.input_bound;
    out << YAML::Key << "recovery_tol_abs" << YAML::Value << c.checks.recovery_tol_abs;
    out << YAML::Key << "recovery_from" << YAML::Value << c.checks.recovery_from;
    out << YAML::EndMap;

    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

/// Overwrite the scalar at a dotted path ("controller.psi0.0", "saturation.level"). Numeric path
/// components index sequences; missing map keys are created.
inline void set_path(YAML::Node root, const std::string& dotted, const std::string& value) {
    std::vector<std::string> parts;
    std::stringstream ss(dotted);
    for (std::string part; std::getline(ss, part, '.');) {
        if (part.empty()) throw ConfigInvalid("grid key '" + dotted + "': empty path component");
        parts.push_back(part);
    }
    if (parts.empty()) throw ConfigInvalid("grid key is empty");
    YAML::Node cur = root;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        const std::string& key = parts[i];
        const bool last = i + 1 == parts.size();
        if (cur.IsSequence()) {
            std::size_t idx = 0;
            try {
                std::size_t used = 0;
                idx = std::stoul(key, &used);
                if (used != key.size()) throw std::invalid_argument(key);
            } catch (const std::exception&) {
                throw ConfigInvalid("grid key '" + dotted + "': '" + key + "' must index a list");
            }
            if (idx >= cur.size()) throw ConfigInvalid("grid key '" + dotted + "': index " + key + " out of range");
            if (last) {
                cur[idx] = value;
                return;
            }
            YAML::Node next = cur[idx];
            cur.reset(next);
        } else {
            if (cur.IsScalar()) throw ConfigInvalid("grid key '" + dotted + "': '" + key + "' descends into a scalar");
            if (last) {
                cur[key] = value;
                return;
            }
            YAML::Node next = cur[key];
            cur.reset(next);
        }
    }
}

}  // namespace funnel::cli
