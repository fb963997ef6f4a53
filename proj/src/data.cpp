#include "ssanova/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

namespace ssanova {

namespace {

std::vector<std::vector<std::string>> parse_csv_text(const std::string& text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> rec;
    std::string field;
    bool in_quotes = false;
    auto end_field = [&]() {
        rec.push_back(std::move(field));
        field.clear();
    };
    auto end_record = [&]() {
        end_field();
        bool all_empty = true;
        for (const auto& f : rec)
            if (!f.empty()) all_empty = false;
        if (!all_empty || rec.size() > 1) records.push_back(rec);
        rec.clear();
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        char ch = text[i];
        if (in_quotes) {
            if (ch == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field += ch;
            }
        } else if (ch == '"') {
            in_quotes = true;
        } else if (ch == ',') {
            end_field();
        } else if (ch == '\r') {
            // swallowed; \n ends the record
        } else if (ch == '\n') {
            end_record();
        } else {
            field += ch;
        }
    }
    if (!field.empty() || !rec.empty()) end_record();
    return records;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

bool is_missing(const std::string& s) {
    return s.empty() || s == "NA" || s == "na" || s == "NaN" || s == "nan" ||
           s == "null";
}

double parse_double(const std::string& s, std::size_t row, const char* what) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
        throw DataError("row " + std::to_string(row) + ": cannot parse " +
                        what + " '" + s + "'");
    return v;
}

long parse_long(const std::string& s, std::size_t row, const char* what) {
    long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw DataError("row " + std::to_string(row) + ": cannot parse " +
                        what + " '" + s + "'");
    return v;
}

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace

ObservationTable read_csv(const std::string& path, const SchemaConfig& schema,
                          ReadReport* report) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    auto records = parse_csv_text(ss.str());
    if (records.empty()) throw DataError("'" + path + "': empty file");

    const auto& header = records[0];
    auto col_of = [&](const std::string& name) {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (trim(header[i]) == name) return static_cast<int>(i);
        return -1;
    };
    int c_subject = col_of(schema.subject);
    int c_minute = col_of(schema.minute);
    int c_vm = col_of(schema.vm);
    int c_day = col_of(schema.day);  // optional
    if (c_subject < 0)
        throw DataError("'" + path + "': missing column '" + schema.subject + "'");
    if (c_minute < 0)
        throw DataError("'" + path + "': missing column '" + schema.minute + "'");
    if (c_vm < 0)
        throw DataError("'" + path + "': missing column '" + schema.vm + "'");
    std::vector<int> c_factors;
    for (const auto& f : schema.factor_columns) {
        int c = col_of(f);
        if (c < 0)
            throw DataError("'" + path + "': missing column '" + f + "'");
        c_factors.push_back(c);
    }
    bool hhmm = schema.time_format == "hhmm";
    if (!hhmm && schema.time_format != "minutes")
        throw ArgumentError("time_format must be 'minutes' or 'hhmm'");

    ObservationTable table;
    for (const auto& f : schema.factor_columns)
        table.factors.push_back(FactorDef{f, {}});

    ReadReport rep;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        std::size_t row_no = r + 1;  // file row, header is row 1
        auto cell = [&](int c) -> std::string {
            return c < static_cast<int>(rec.size()) ? trim(rec[c]) : "";
        };
        std::string vm_raw = cell(c_vm);
        if (is_missing(vm_raw)) {
            ++rep.n_dropped;
            rep.dropped_rows.push_back(row_no);
            continue;
        }
        Observation o;
        o.response = parse_double(vm_raw, row_no, schema.vm.c_str());
        o.subject = cell(c_subject);
        if (o.subject.empty())
            throw DataError("row " + std::to_string(row_no) +
                            ": empty subject");
        std::string t_raw = cell(c_minute);
        if (hhmm) {
            long v = parse_long(t_raw, row_no, schema.minute.c_str());
            long hh = v / 100, mm = v % 100;
            if (hh < 0 || hh > 23 || mm < 0 || mm > 59)
                throw DataError("row " + std::to_string(row_no) +
                                ": invalid HHMM time '" + t_raw + "'");
            o.time = static_cast<double>(hh * 60 + mm);
        } else {
            o.time = parse_double(t_raw, row_no, schema.minute.c_str());
            if (!(o.time >= 0.0 && o.time < 1440.0))
                throw DataError("row " + std::to_string(row_no) + ": minute " +
                                t_raw + " outside [0,1440)");
        }
        if (c_day >= 0) {
            std::string d_raw = cell(c_day);
            if (!d_raw.empty())
                o.day = static_cast<int>(parse_long(d_raw, row_no,
                                                    schema.day.c_str()));
        }
        for (std::size_t f = 0; f < c_factors.size(); ++f) {
            std::string lvl = cell(c_factors[f]);
            if (lvl.empty())
                throw DataError("row " + std::to_string(row_no) +
                                ": empty level for factor '" +
                                schema.factor_columns[f] + "'");
            if (table.factors[f].level_index(lvl) < 0)
                table.factors[f].levels.push_back(lvl);
            o.levels.push_back(std::move(lvl));
        }
        table.rows.push_back(std::move(o));
        ++rep.n_read;
    }
    if (table.rows.empty())
        throw DataError("'" + path + "': no usable rows");
    if (report) *report = std::move(rep);
    return table;
}

std::string to_csv(const ObservationTable& table, const SchemaConfig& schema) {
    std::string out = schema.subject + "," + schema.day + "," + schema.minute +
                      "," + schema.vm;
    for (std::size_t f = 0; f < table.factors.size(); ++f)
        out += "," + table.factors[f].name;
    out += "\n";
    for (const auto& o : table.rows) {
        out += csv_escape(o.subject);
        out += "," + std::to_string(o.day);
        out += "," + format_double(o.time);
        out += "," + format_double(o.response);
        for (const auto& lvl : o.levels) out += "," + csv_escape(lvl);
        out += "\n";
    }
    return out;
}

void write_csv(const ObservationTable& table, const std::string& path,
               const SchemaConfig& schema) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write '" + tmp + "'");
        out << to_csv(table, schema);
        if (!out) throw IoError("write failed for '" + tmp + "'");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw IoError("cannot rename '" + tmp + "' to '" + path + "'");
}

ObservationTable aggregate_daily(const ObservationTable& table,
                                 AggregateMode mode) {
    if (mode == AggregateMode::stack_days) return table;

    ObservationTable out;
    out.factors = table.factors;
    std::map<std::tuple<std::string, double, std::vector<std::string>>,
             std::size_t>
        index;
    std::vector<double> sums;
    std::vector<std::size_t> counts;
    for (const auto& o : table.rows) {
        auto key = std::make_tuple(o.subject, o.time, o.levels);
        auto it = index.find(key);
        if (it == index.end()) {
            index.emplace(std::move(key), out.rows.size());
            Observation agg = o;
            agg.day = 0;
            agg.response = 0.0;
            out.rows.push_back(std::move(agg));
            sums.push_back(o.response);
            counts.push_back(1);
        } else {
            sums[it->second] += o.response;
            counts[it->second] += 1;
        }
    }
    for (std::size_t i = 0; i < out.rows.size(); ++i)
        out.rows[i].response = sums[i] / static_cast<double>(counts[i]);
    return out;
}

namespace {

struct Stats {
    double mean = 0, sd = 0, min = 0, median = 0, max = 0;
};

Stats stats_of(std::vector<double> v) {
    Stats s;
    if (v.empty()) return s;
    double sum = 0;
    for (double x : v) sum += x;
    s.mean = sum / v.size();
    double ss = 0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.sd = v.size() > 1 ? std::sqrt(ss / (v.size() - 1)) : 0.0;
    std::sort(v.begin(), v.end());
    s.min = v.front();
    s.max = v.back();
    std::size_t h = v.size() / 2;
    s.median = v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
    return s;
}

}  // namespace

SummaryTable summarize(const ObservationTable& table,
                       const std::string& group_factor) {
    int gf = table.factor_index(group_factor);
    if (gf < 0) throw ArgumentError("unknown factor '" + group_factor + "'");
    const FactorDef& fd = table.factors[gf];

    SummaryTable out;
    out.group_factor = group_factor;
    for (std::size_t g = 0; g < fd.levels.size(); ++g) {
        GroupSummary gs;
        gs.group = fd.levels[g];
        std::vector<double> vm, tm;
        std::set<std::string> subjects;
        std::vector<std::size_t> binary_hits(table.factors.size(), 0);
        for (const auto& o : table.rows) {
            if (o.levels[gf] != fd.levels[g]) continue;
            vm.push_back(o.response);
            tm.push_back(o.time);
            subjects.insert(o.subject);
            for (std::size_t f = 0; f < table.factors.size(); ++f)
                if (f != static_cast<std::size_t>(gf) &&
                    table.factors[f].levels.size() == 2 &&
                    o.levels[f] == table.factors[f].levels[1])
                    ++binary_hits[f];
        }
        gs.n_rows = vm.size();
        gs.n_subjects = subjects.size();
        Stats sv = stats_of(vm), st = stats_of(tm);
        gs.vm_mean = sv.mean;
        gs.vm_std = sv.sd;
        gs.vm_min = sv.min;
        gs.vm_median = sv.median;
        gs.vm_max = sv.max;
        gs.time_mean = st.mean;
        gs.time_std = st.sd;
        gs.time_min = st.min;
        gs.time_median = st.median;
        gs.time_max = st.max;
        for (std::size_t f = 0; f < table.factors.size(); ++f)
            if (f != static_cast<std::size_t>(gf) &&
                table.factors[f].levels.size() == 2)
                gs.binary_percent.emplace_back(
                    table.factors[f].name + "=" + table.factors[f].levels[1],
                    gs.n_rows ? 100.0 * binary_hits[f] / gs.n_rows : 0.0);
        out.groups.push_back(std::move(gs));
    }
    return out;
}

// ------------------------------------------------------------ synthesis ---

double integrate01(const std::function<double(double)>& f, int intervals) {
    int n = intervals % 2 == 0 ? intervals : intervals + 1;
    double h = 1.0 / n;
    double acc = f(0.0) + f(1.0);
    for (int i = 1; i < n; ++i) acc += (i % 2 == 1 ? 4.0 : 2.0) * f(i * h);
    return acc * h / 3.0;
}

double NormalSampler::uniform() {
    return (static_cast<double>(gen_() >> 11) + 1.0) *
           (1.0 / 9007199254740992.0);
}

double NormalSampler::normal() {
    double u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

SyntheticScenario SyntheticScenario::default_scenario() {
    SyntheticScenario sc;
    sc.groups = {"g1", "g2", "g3", "g4"};
    sc.eta0 = 6.0;
    const double a = 2.0, w = 0.15;
    const double mass =
        a * w * std::sqrt(2.0 * M_PI) * std::erf(0.5 / (std::sqrt(2.0) * w));
    sc.eta1 = [a, w, mass](double u) {
        return a * std::exp(-(u - 0.5) * (u - 0.5) / (2.0 * w * w)) - mass;
    };
    sc.eta2 = {0.6, 0.2, -0.2, -0.6};
    const double gam[4] = {0.5, -0.5, 0.25, -0.25};
    for (int g = 0; g < 4; ++g) {
        double c = gam[g];
        sc.eta12.push_back(
            [c](double u) { return c * std::sin(2.0 * M_PI * u); });
    }
    sc.sigma_b = 0.5;
    sc.sigma_eps = 1.0;
    sc.subjects_per_group = 10;
    sc.minutes_per_subject = 144;
    sc.seed = 42;
    return sc;
}

SyntheticScenario SyntheticScenario::from_group_curves(
    std::vector<std::string> groups,
    std::vector<std::function<double(double)>> f_g, double sigma_b,
    double sigma_eps, int subjects_per_group, int minutes_per_subject,
    std::uint64_t seed) {
    if (groups.size() != f_g.size() || groups.empty())
        throw ArgumentError("from_group_curves: one curve per group required");
    const int K = static_cast<int>(groups.size());
    std::vector<double> I(K);
    double grand = 0.0;
    for (int g = 0; g < K; ++g) {
        I[g] = integrate01(f_g[g], 4096);
        grand += I[g];
    }
    grand /= K;

    SyntheticScenario sc;
    sc.groups = std::move(groups);
    sc.eta0 = grand;
    auto curves = std::make_shared<std::vector<std::function<double(double)>>>(
        std::move(f_g));
    sc.eta1 = [curves, K, grand](double u) {
        double m = 0.0;
        for (const auto& f : *curves) m += f(u);
        return m / K - grand;
    };
    for (int g = 0; g < K; ++g) {
        sc.eta2.push_back(I[g] - grand);
        double off = I[g] - grand;
        sc.eta12.push_back([curves, K, g, off](double u) {
            double m = 0.0;
            for (const auto& f : *curves) m += f(u);
            return (*curves)[g](u) - m / K - off;
        });
    }
    sc.sigma_b = sigma_b;
    sc.sigma_eps = sigma_eps;
    sc.subjects_per_group = subjects_per_group;
    sc.minutes_per_subject = minutes_per_subject;
    sc.seed = seed;
    return sc;
}

std::pair<ObservationTable, TruthOracle> synthesize(
    const SyntheticScenario& sc) {
    if (!(sc.sigma_b >= 0.0) || !(sc.sigma_eps >= 0.0) ||
        !std::isfinite(sc.sigma_b) || !std::isfinite(sc.sigma_eps))
        throw ArgumentError("sigma_b and sigma_eps must be finite and >= 0");
    if (sc.subjects_per_group < 1 || sc.minutes_per_subject < 1)
        throw ArgumentError("scenario needs >= 1 subject and >= 1 minute");
    const int K = static_cast<int>(sc.groups.size());
    if (K > 0 && (sc.eta2.size() != sc.groups.size() ||
                  sc.eta12.size() != sc.groups.size()))
        throw ArgumentError("eta2/eta12 must have one entry per group");
    if (!sc.eta1) throw ArgumentError("scenario needs eta1");

    TruthOracle truth;
    truth.groups = sc.groups;
    truth.eta0 = sc.eta0;
    truth.eta1_u = sc.eta1;
    truth.eta2 = sc.eta2;
    truth.eta12_u = sc.eta12;

    ObservationTable table;
    if (K > 0) table.factors.push_back(FactorDef{sc.factor_name, sc.groups});

    NormalSampler rng(sc.seed);
    const int groups_loop = K > 0 ? K : 1;
    char label[64];
    for (int g = 0; g < groups_loop; ++g) {
        for (int s = 0; s < sc.subjects_per_group; ++s) {
            if (K > 0)
                std::snprintf(label, sizeof(label), "%s_s%03d",
                              sc.groups[g].c_str(), s + 1);
            else
                std::snprintf(label, sizeof(label), "s%03d", s + 1);
            double b = sc.sigma_b * rng.normal();
            for (int k = 0; k < sc.minutes_per_subject; ++k) {
                double minute = k * (1440.0 / sc.minutes_per_subject);
                Observation o;
                o.subject = label;
                o.time = minute;
                if (K > 0) o.levels.push_back(sc.groups[g]);
                double eps = sc.sigma_eps * rng.normal();
                o.response = truth.eta(minute, K > 0 ? g : 0) + b + eps;
                table.rows.push_back(std::move(o));
            }
        }
    }
    return {std::move(table), std::move(truth)};
}

}  // namespace ssanova
