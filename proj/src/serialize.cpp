#include "gqf/serialize.hpp"

#include <fstream>

namespace gqf {

const char* kVersion = "0.1.0";

namespace {

Json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw invalid_input("cannot open file: " + path);
    Json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw invalid_input("malformed JSON in " + path + ": " + e.what());
    }
    return j;
}

Rat rat_from_json(const Json& j, const std::string& where) {
    if (j.is_number_integer()) return Rat(long(j.get<int64_t>()));
    if (j.is_string()) return parse_rat(j.get<std::string>());
    throw invalid_input("expected a rational at " + where);
}

}  // namespace

FieldPtr field_from_json(const Json& j) {
    FieldDesc desc;
    if (!j.contains("min_poly")) throw invalid_input("field description: missing min_poly");
    for (const auto& c : j.at("min_poly")) {
        if (c.is_number_integer()) desc.min_poly.push_back(Int(long(c.get<int64_t>())));
        else if (c.is_string()) desc.min_poly.push_back(Int(c.get<std::string>()));
        else throw invalid_input("field description: min_poly entries must be integers");
    }
    if (!j.contains("basis")) throw invalid_input("field description: missing basis");
    for (const auto& row : j.at("basis")) {
        std::vector<Rat> r;
        for (const auto& c : row) r.push_back(rat_from_json(c, "basis"));
        desc.basis.push_back(std::move(r));
    }
    if (j.contains("degree")) {
        int d = j.at("degree").get<int>();
        if (d != int(desc.basis.size()))
            throw invalid_input("field description: degree does not match the basis");
    }
    if (!j.contains("galois")) throw invalid_input("field description: missing galois");
    for (const auto& g : j.at("galois")) {
        if (g.empty()) throw invalid_input("field description: empty galois entry");
        if (g.front().is_array()) {
            // coordinate matrix
            QMat M(int(g.size()), int(g.size()));
            for (int i = 0; i < int(g.size()); i++)
                for (int k = 0; k < int(g.size()); k++)
                    M.at(i, k) = rat_from_json(g.at(size_t(i)).at(size_t(k)), "galois");
            desc.galois_mats.push_back(std::move(M));
        } else {
            std::vector<int> perm;
            for (const auto& v : g) perm.push_back(v.get<int>());
            desc.galois_perms.push_back(std::move(perm));
        }
    }
    if (!desc.galois_mats.empty() && !desc.galois_perms.empty())
        throw invalid_input("field description: mix of galois matrices and permutations");
    return NumberField::from_description(desc);
}

FieldPtr load_field(const std::string& spec) {
    if (spec.rfind("Qsqrt:", 0) == 0) {
        return NumberField::real_quadratic(Int(spec.substr(6)));
    }
    return field_from_json(load_json_file(spec));
}

namespace {

FieldElement element_from_json(const FieldPtr& K, const Json& j, const std::string& where) {
    if (j.is_string()) return K->parse_element(j.get<std::string>());
    if (j.is_number_integer()) return K->from_rat(Rat(long(j.get<int64_t>())));
    if (j.is_array()) {
        std::vector<Rat> c;
        for (const auto& v : j) c.push_back(rat_from_json(v, where));
        return K->element(std::move(c));
    }
    throw invalid_input("expected a field element at " + where);
}

}  // namespace

GQF form_from_json(const FieldPtr& K, const Json& j) {
    if (j.contains("a")) {
        std::vector<FieldElement> a, b;
        for (const auto& v : j.at("a")) a.push_back(element_from_json(K, v, "a"));
        if (j.contains("b"))
            for (const auto& v : j.at("b")) b.push_back(element_from_json(K, v, "b"));
        int tau = -1;
        if (j.contains("tau")) tau = j.at("tau").get<int>() - 1;
        else
            for (int t = 0; t < K->galois_count(); t++)
                if (t != K->galois_identity()) { tau = t; break; }
        return make_diagonal(a, b, tau);
    }
    if (!j.contains("n") || !j.contains("coeffs"))
        throw invalid_input("form file: need {n, coeffs} or the diagonal shorthand {a, b, tau}");
    int n = j.at("n").get<int>();
    int g = K->galois_count();
    std::vector<FieldElement> c(size_t(n) * size_t(g) * size_t(n) * size_t(g), K->zero());
    auto put = [&](int i, int ti, int jj, int tj, const FieldElement& v) {
        if (i < 0 || i >= n || jj < 0 || jj >= n || ti < 0 || ti >= g || tj < 0 || tj >= g)
            throw invalid_input("form file: coefficient index out of range");
        c[((size_t(i) * size_t(g) + size_t(ti)) * size_t(n) + size_t(jj)) * size_t(g) +
          size_t(tj)] = v;
    };
    for (const auto& e : j.at("coeffs")) {
        int i = e.at("i").get<int>() - 1;
        int jj = e.at("j").get<int>() - 1;
        int ti = (e.contains("tau") ? e.at("tau").get<int>() : 1) - 1;
        int tj = (e.contains("tau'") ? e.at("tau'").get<int>()
                                     : (e.contains("tau2") ? e.at("tau2").get<int>() : 1)) -
                 1;
        FieldElement v = element_from_json(K, e.at("value"), "coeffs.value");
        put(i, ti, jj, tj, v);
        put(jj, tj, i, ti, v);
    }
    return GQF::from_coeffs(K, n, std::move(c));
}

Json form_to_json(const GQF& F) {
    Json j;
    j["n"] = F.vars();
    Json coeffs = Json::array();
    int g = F.gal();
    for (int i = 0; i < F.vars(); i++)
        for (int ti = 0; ti < g; ti++)
            for (int jj = 0; jj < F.vars(); jj++)
                for (int tj = 0; tj < g; tj++) {
                    if (size_t(i) * size_t(g) + size_t(ti) >
                        size_t(jj) * size_t(g) + size_t(tj))
                        continue;
                    const FieldElement& v = F.coeff(i, ti, jj, tj);
                    if (v.is_zero()) continue;
                    Json e;
                    e["i"] = i + 1;
                    e["j"] = jj + 1;
                    e["tau"] = ti + 1;
                    e["tau'"] = tj + 1;
                    Json coords = Json::array();
                    for (const Rat& r : v.coords()) coords.push_back(rat_to_string(r));
                    e["value"] = coords;
                    coeffs.push_back(e);
                }
    j["coeffs"] = coeffs;
    return j;
}

GQF load_form(const FieldPtr& K, const std::string& spec) {
    if (spec.rfind("a=", 0) == 0) {
        // a=<e>,<e>;b=<e>[;tau=<k>]
        std::vector<FieldElement> a, b;
        int tau = -1;
        size_t pos = 0;
        while (pos < spec.size()) {
            size_t semi = spec.find(';', pos);
            std::string part = spec.substr(pos, semi == std::string::npos ? semi : semi - pos);
            pos = (semi == std::string::npos) ? spec.size() : semi + 1;
            if (part.rfind("a=", 0) == 0 || part.rfind("b=", 0) == 0) {
                bool is_a = part[0] == 'a';
                std::string list = part.substr(2);
                size_t p2 = 0;
                while (p2 <= list.size() && !list.empty()) {
                    size_t comma = list.find(',', p2);
                    std::string tok =
                        list.substr(p2, comma == std::string::npos ? comma : comma - p2);
                    if (!tok.empty())
                        (is_a ? a : b).push_back(K->parse_element(tok));
                    if (comma == std::string::npos) break;
                    p2 = comma + 1;
                }
            } else if (part.rfind("tau=", 0) == 0) {
                tau = std::stoi(part.substr(4)) - 1;
            } else if (!part.empty()) {
                throw invalid_input("malformed diagonal shorthand: '" + part + "'");
            }
        }
        if (tau < 0)
            for (int t = 0; t < K->galois_count(); t++)
                if (t != K->galois_identity()) { tau = t; break; }
        return make_diagonal(a, b, tau);
    }
    return form_from_json(K, load_json_file(spec));
}

Json system_to_json(const DescendedSystem& S) {
    Json j;
    j["n"] = S.n;
    j["d"] = S.field->degree();
    Json forms = Json::array();
    for (const QMat& M : S.forms) {
        Json rows = Json::array();
        for (int i = 0; i < M.rows(); i++)
            for (int k = 0; k < M.cols(); k++) rows.push_back(rat_to_string(M.at(i, k)));
        forms.push_back(rows);
    }
    j["forms"] = forms;
    if (!S.shift.empty()) {
        Json sh = Json::array();
        for (const Int& v : S.shift) sh.push_back(v.get_str());
        j["shift"] = sh;
    }
    return j;
}

DescendedSystem system_from_json(const FieldPtr& K, const Json& j) {
    DescendedSystem S;
    S.field = K;
    S.n = j.at("n").get<int>();
    int d = j.contains("d") ? j.at("d").get<int>() : K->degree();
    if (d != K->degree()) throw invalid_input("system file: degree mismatch with the field");
    const int N = d * S.n;
    for (const auto& rows : j.at("forms")) {
        if (int(rows.size()) != N * N) throw invalid_input("system file: matrix size mismatch");
        QMat M(N, N);
        int idx = 0;
        for (int i = 0; i < N; i++)
            for (int k = 0; k < N; k++) M.at(i, k) = rat_from_json(rows.at(size_t(idx++)), "forms");
        S.forms.push_back(std::move(M));
    }
    if (j.contains("shift"))
        for (const auto& v : j.at("shift"))
            S.shift.push_back(v.is_string() ? Int(v.get<std::string>())
                                            : Int(long(v.get<int64_t>())));
    return S;
}

Json ideal_to_json(const Ideal& a) {
    Json j;
    j["den"] = a.den().get_str();
    Json mat = Json::array();
    for (int i = 0; i < a.mat().rows(); i++)
        for (int k = 0; k < a.mat().cols(); k++) mat.push_back(a.mat().at(i, k).get_str());
    j["mat"] = mat;
    return j;
}

Json density_report_to_json(const MainTerm& mt) {
    Json j;
    Json primes = Json::array();
    for (const auto& pd : mt.series.primes) {
        Json p;
        p["p"] = pd.p.get_str();
        p["l_used"] = pd.l_used;
        p["sigma"] = rat_to_string(pd.sigma);
        p["stabilized"] = pd.stabilized;
        p["nonsingular_found"] = pd.nonsingular_found;
        p["hensel_certified"] = pd.hensel_certified;
        p["budget_hit"] = pd.budget_hit;
        primes.push_back(p);
    }
    j["primes"] = primes;
    j["sigma_series"] = mt.series.value;
    j["series_obstructed"] = mt.series.obstructed;
    j["series_tail_sensitivity"] = mt.series.tail_sensitivity;
    j["sigma_infinity"] = mt.integral.value;
    j["sigma_infinity_stderr"] = mt.integral.stderr_;
    j["sigma_infinity_half_eps"] = mt.integral.value_half;
    j["mc_samples"] = mt.integral.samples;
    j["mc_hits"] = mt.integral.hits;
    j["eps_slab"] = mt.integral.eps;
    j["xi"] = mt.point.xi;
    j["xi_residual"] = mt.point.residual;
    j["xi_min_jacobian_sv"] = mt.point.min_jacobian_sv;
    j["delta"] = mt.delta;
    j["P"] = mt.P;
    j["constant_c"] = mt.constant;
    j["constant_c_stderr"] = mt.stderr_;
    j["predicted"] = mt.predicted;
    return j;
}

Json assumption_report_to_json(const AssumptionReport& rep) {
    Json j;
    j["det_A"] = rep.det_A.to_string();
    j["det_R_block"] = rep.det_R_block.to_string();
    j["det_conditions_ok"] = rep.det_conditions_ok;
    Json pencils = Json::array();
    auto verdict = [](Verdict v) {
        return v == Verdict::yes ? "yes" : (v == Verdict::no ? "no" : "inconclusive");
    };
    for (const auto& pr : rep.pencils) {
        Json p;
        p["embedding"] = pr.l + 1;
        p["det_poly"] = pr.det_poly;
        p["degree"] = pr.degree;
        p["degree_ok"] = pr.degree_ok;
        p["rank_ok"] = verdict(pr.rank_ok);
        p["suspicious_t"] = pr.suspicious_t;
        pencils.push_back(p);
    }
    j["pencils"] = pencils;
    j["degree_condition_ok"] = rep.degree_condition_ok;
    j["rank_condition"] = verdict(rep.rank_condition);
    j["jacobian_probe_rank"] = rep.jacobian_probe_rank;
    j["codimension_probe_ok"] = rep.codimension_probe_ok;
    return j;
}

Json report_envelope(const std::string& command, const Json& config, uint64_t seed,
                     double wall_ms, Json result) {
    Json j;
    j["version"] = kVersion;
    j["command"] = command;
    j["config"] = config;
    j["seed"] = seed;
    j["result"] = std::move(result);
    j["wall_time_ms"] = wall_ms;  // the only nondeterministic field
    return j;
}

}  // namespace gqf
