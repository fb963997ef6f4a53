#include "ssanova/model_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace ssanova {

using json = nlohmann::ordered_json;

void write_text_atomic(const std::string& path, const std::string& content) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write '" + tmp + "'");
        out << content;
        if (!out) throw IoError("write failed for '" + tmp + "'");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw IoError("cannot rename '" + tmp + "' to '" + path + "'");
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace {

json spec_to_json(const ModelSpec& spec) {
    json terms = json::array();
    for (const auto& t : spec.terms) {
        json jt;
        jt["kind"] = term_kind_name(t.kind);
        if (!t.factor.empty()) jt["factor"] = t.factor;
        if (t.penalized_override) jt["unpenalized"] = true;
        terms.push_back(jt);
    }
    json j;
    j["terms"] = terms;
    j["transform"] = transform_name(spec.transform);
    j["criterion"] = criterion_name(spec.criterion);
    j["knot_count"] = spec.knot_count;
    j["seed"] = spec.seed;
    return j;
}

TermKind parse_term_kind(const std::string& s) {
    for (TermKind k :
         {TermKind::constant, TermKind::time_linear, TermKind::time_smooth,
          TermKind::nominal_main, TermKind::time_by_nominal_linear,
          TermKind::time_by_nominal_smooth, TermKind::random_intercept})
        if (s == term_kind_name(k)) return k;
    throw DataError("unknown term kind '" + s + "'");
}

ModelSpec spec_from_json(const json& j) {
    ModelSpec spec;
    for (const auto& jt : j.at("terms")) {
        TermSpec t;
        t.kind = parse_term_kind(jt.at("kind").get<std::string>());
        if (jt.contains("factor")) t.factor = jt["factor"].get<std::string>();
        if (jt.contains("unpenalized")) t.penalized_override = jt["unpenalized"];
        spec.terms.push_back(std::move(t));
    }
    spec.transform = parse_transform(j.at("transform").get<std::string>());
    spec.criterion = parse_criterion(j.at("criterion").get<std::string>());
    spec.knot_count = j.at("knot_count").get<int>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    return spec;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

Eigen::VectorXd vector_from_json(const json& a) {
    Eigen::VectorXd v(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) v[i] = a[i].get<double>();
    return v;
}

}  // namespace

std::string model_to_json(const FittedModel& model) {
    json j;
    j["format"] = "ssanova-model/1";
    j["spec"] = spec_to_json(model.plan.spec);
    json factors = json::array();
    for (const auto& f : model.plan.factors)
        factors.push_back({{"name", f.name}, {"levels", f.levels}});
    j["factors"] = factors;
    j["subjects"] = model.plan.subjects;
    json knots = json::array();
    for (const auto& k : model.knots)
        knots.push_back({{"t", k.t}, {"levels", k.levels}});
    j["knots"] = knots;
    j["d"] = vector_to_json(model.d);
    j["c"] = vector_to_json(model.c);
    j["b"] = vector_to_json(model.b_hat);
    j["params"] = {{"log_lambda", model.params.log_lambda},
                   {"log_theta", model.params.log_theta},
                   {"log_lambda_b", model.params.log_lambda_b}};
    j["sigma2_eps"] = model.sigma2_eps;
    j["sigma2_b"] = model.sigma2_b;
    j["trace_A"] = model.trace_A;
    j["criterion_value"] = model.criterion_value;
    j["r_squared"] = model.r_squared;
    j["rss"] = model.rss;
    j["y_scale"] = model.y_scale;
    j["n"] = model.n;
    json M = json::array();
    for (Eigen::Index i = 0; i < model.M.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index c = 0; c < model.M.cols(); ++c)
            row.push_back(model.M(i, c));
        M.push_back(std::move(row));
    }
    j["M"] = M;
    return j.dump(1) + "\n";
}

FittedModel model_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("corrupt model file: ") + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != "ssanova-model/1")
            throw DataError("unsupported model format");

        FittedModel model;
        ModelSpec spec = spec_from_json(j.at("spec"));
        std::vector<FactorDef> factors;
        for (const auto& jf : j.at("factors"))
            factors.push_back(FactorDef{jf.at("name").get<std::string>(),
                                        jf.at("levels")
                                            .get<std::vector<std::string>>()});
        std::vector<std::string> subjects =
            j.at("subjects").get<std::vector<std::string>>();
        model.plan = bind_plan(spec, factors, subjects);
        model.layout = build_layout(model.plan);

        for (const auto& jk : j.at("knots")) {
            Point p;
            p.t = jk.at("t").get<double>();
            p.levels = jk.at("levels").get<std::vector<int>>();
            model.knots.push_back(std::move(p));
        }
        model.d = vector_from_json(j.at("d"));
        model.c = vector_from_json(j.at("c"));
        model.b_hat = vector_from_json(j.at("b"));
        model.params.log_lambda = j.at("params").at("log_lambda");
        model.params.log_theta =
            j.at("params").at("log_theta").get<std::vector<double>>();
        model.params.log_lambda_b = j.at("params").at("log_lambda_b");
        model.sigma2_eps = j.at("sigma2_eps");
        model.sigma2_b = j.at("sigma2_b");
        model.trace_A = j.at("trace_A");
        model.criterion_value = j.at("criterion_value");
        model.r_squared = j.at("r_squared");
        model.rss = j.at("rss");
        model.y_scale = j.at("y_scale");
        model.n = j.at("n");

        const auto& jM = j.at("M");
        int p = static_cast<int>(jM.size());
        model.M.resize(p, p);
        for (int i = 0; i < p; ++i) {
            const auto& row = jM[i];
            if (static_cast<int>(row.size()) != p)
                throw DataError("corrupt model file: M is not square");
            for (int c = 0; c < p; ++c) model.M(i, c) = row[c].get<double>();
        }
        if (p != model.p() ||
            model.q() != static_cast<int>(model.knots.size()))
            throw DataError("corrupt model file: inconsistent dimensions");

        model.llt.compute(model.M);
        if (model.llt.info() != Eigen::Success)
            throw DataError("corrupt model file: factorization failed");
        return model;
    } catch (const json::exception& e) {
        throw DataError(std::string("corrupt model file: ") + e.what());
    }
}

void save_model(const FittedModel& model, const std::string& path) {
    write_text_atomic(path, model_to_json(model));
}

FittedModel load_model(const std::string& path) {
    return model_from_json(read_text(path));
}

std::string report_to_json(const FitReport& r) {
    json j;
    j["n"] = r.n;
    j["knots"] = r.knots;
    j["null_dim"] = r.null_dim;
    j["subjects"] = r.subjects;
    j["r_squared"] = r.r_squared;
    j["sigma_eps"] = r.sigma_eps;
    j["sigma_b"] = r.sigma_b;
    j["trace_A"] = r.trace_A;
    j["criterion"] = r.criterion;
    j["criterion_value"] = r.criterion_value;
    j["lambda"] = r.lambda;
    j["lambda_b"] = r.lambda_b;
    json th = json::object();
    for (const auto& [name, v] : r.theta) th[name] = v;
    j["theta"] = th;
    j["transform"] = r.transform;
    return j.dump(1) + "\n";
}

FitReport report_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
        FitReport r;
        r.n = j.at("n");
        r.knots = j.at("knots");
        r.null_dim = j.at("null_dim");
        r.subjects = j.at("subjects");
        r.r_squared = j.at("r_squared");
        r.sigma_eps = j.at("sigma_eps");
        r.sigma_b = j.at("sigma_b");
        r.trace_A = j.at("trace_A");
        r.criterion = j.at("criterion");
        r.criterion_value = j.at("criterion_value");
        r.lambda = j.at("lambda");
        r.lambda_b = j.at("lambda_b");
        for (const auto& [k, v] : j.at("theta").items())
            r.theta.emplace_back(k, v.get<double>());
        r.transform = j.at("transform");
        return r;
    } catch (const json::exception& e) {
        throw DataError(std::string("corrupt report: ") + e.what());
    }
}

std::string regions_to_json(const RegionSet& rs) {
    json j;
    j["level"] = rs.level;
    json arr = json::array();
    for (const auto& [a, b] : rs.intervals)
        arr.push_back({{"start_minute", a}, {"end_minute", b}});
    j["regions"] = arr;
    return j.dump(1) + "\n";
}

}  // namespace ssanova
