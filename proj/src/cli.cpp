#include "hotelling/cli.hpp"

#include "hotelling/svg.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace fs = std::filesystem;
using nlohmann::json;

namespace hotelling {

// ------------------------------ small utilities ------------------------------

const char* subcommand_name(Subcommand subcommand) {
    switch (subcommand) {
        case Subcommand::two_firm: return "two-firm";
        case Subcommand::variance_scaling: return "variance-scaling";
        case Subcommand::multi_firm: return "multi-firm";
        case Subcommand::gamma_sweep: return "gamma-sweep";
        case Subcommand::non_pbc_demo: return "non-pbc-demo";
        case Subcommand::nash_table: return "nash-table";
        case Subcommand::assign_map: return "assign-map";
    }
    return "?";
}

namespace {

const char* kind_name(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::two_firm_sweep: return "two_firm_sweep";
        case ExperimentKind::variance_scaling: return "variance_scaling";
        case ExperimentKind::multi_firm_sweep: return "multi_firm_sweep";
        case ExperimentKind::gamma_sweep: return "gamma_sweep";
        case ExperimentKind::non_pbc_demo: return "non_pbc_demo";
        case ExperimentKind::nash_table: return "nash_table";
    }
    return "?";
}

std::string timestamp_utc() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y%m%dT%H%M%SZ", &tm);
    return buf;
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream stream(text);
    while (std::getline(stream, item, sep)) out.push_back(item);
    if (!text.empty() && text.back() == sep) out.push_back("");
    return out;
}

double parse_one_double(const std::string& token, const std::string& flag) {
    try {
        size_t used = 0;
        const double v = std::stod(token, &used);
        if (used != token.size()) throw std::invalid_argument("trailing junk");
        return v;
    } catch (const std::exception&) {
        throw CliUsageError(flag + ": cannot parse '" + token + "' as a number");
    }
}

long long parse_one_int(const std::string& token, const std::string& flag) {
    try {
        size_t used = 0;
        const long long v = std::stoll(token, &used);
        if (used != token.size()) throw std::invalid_argument("trailing junk");
        return v;
    } catch (const std::exception&) {
        throw CliUsageError(flag + ": cannot parse '" + token + "' as an integer");
    }
}

}  // namespace

std::vector<double> parse_double_list(const std::string& text, const std::string& flag) {
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        const auto parts = split(text, ':');
        if (parts.size() != 3)
            throw CliUsageError(flag + ": range shorthand is start:stop:count");
        const double start = parse_one_double(parts[0], flag);
        const double stop = parse_one_double(parts[1], flag);
        const long long count = parse_one_int(parts[2], flag);
        if (count < 1) throw CliUsageError(flag + ": range count must be >= 1");
        if (count == 1) {
            out.push_back(start);
            return out;
        }
        for (long long i = 0; i < count; ++i)
            out.push_back(start + (stop - start) * static_cast<double>(i) / (count - 1));
        return out;
    }
    for (const std::string& token : split(text, ','))
        out.push_back(parse_one_double(token, flag));
    if (out.empty()) throw CliUsageError(flag + ": list must be nonempty");
    return out;
}

std::vector<int> parse_int_list(const std::string& text, const std::string& flag) {
    std::vector<int> out;
    for (double v : parse_double_list(text, flag)) {
        const double rounded = std::round(v);
        if (std::abs(v - rounded) > 1e-9)
            throw CliUsageError(flag + ": expected integer values");
        out.push_back(static_cast<int>(rounded));
    }
    return out;
}

std::vector<uint64_t> parse_seed_list(const std::string& text, const std::string& flag) {
    std::vector<uint64_t> out;
    for (int v : parse_int_list(text, flag)) {
        if (v < 0) throw CliUsageError(flag + ": seeds must be >= 0");
        out.push_back(static_cast<uint64_t>(v));
    }
    return out;
}

std::string format_csv_number(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    for (const std::string& line : split(text, '\n')) {
        if (line.empty()) continue;
        rows.push_back(split(line, ','));
    }
    return rows;
}

void write_file_atomic(const std::string& path, const std::string& content) {
    static std::atomic<unsigned> counter{0};
    const std::string tmp =
        path + ".tmp-" + std::to_string(::getpid()) + "-" + std::to_string(counter.fetch_add(1));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open '" + tmp + "' for writing");
        out << content;
        out.flush();
        if (!out) {
            out.close();
            std::error_code ec;
            fs::remove(tmp, ec);
            throw std::runtime_error("short write to '" + tmp + "'");
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        std::error_code ec2;
        fs::remove(tmp, ec2);
        throw std::runtime_error("cannot move output into place at '" + path + "': " +
                                 ec.message());
    }
}

// ---------------------------------- CSV/dat -----------------------------------

namespace {

std::string csv_cell(double v) { return std::isfinite(v) ? format_csv_number(v) : ""; }

const char* kSweepHeader =
    "agg,d,n_side,m,gamma,seed,n_seeds,mean_price,mean_profit,std_profit,var_profit,"
    "std_var_profit,converged,theory";

void append_row_csv(std::string& out, const ResultRow& row) {
    out += "0,";
    out += csv_cell(row.d) + ",";
    out += row.n_side > 0 ? std::to_string(row.n_side) : "";
    out += ",";
    out += row.m > 0 ? std::to_string(row.m) : "";
    out += ",";
    out += csv_cell(row.gamma) + ",";
    out += std::to_string(row.seed) + ",";
    out += ",";  // n_seeds
    out += csv_cell(row.mean_price) + ",";
    out += csv_cell(row.mean_profit) + ",";
    out += ",";  // std_profit
    out += csv_cell(row.var_profit) + ",";
    out += ",";  // std_var_profit
    out += row.converged ? "1" : "0";
    out += ",";
    out += csv_cell(row.theory);
    out += "\n";
}

void append_aggregate_csv(std::string& out, const AggregatePoint& agg) {
    out += "1,";
    out += csv_cell(agg.d) + ",";
    out += agg.n_side > 0 ? std::to_string(agg.n_side) : "";
    out += ",";
    out += agg.m > 0 ? std::to_string(agg.m) : "";
    out += ",";
    out += csv_cell(agg.gamma) + ",";
    out += ",";  // seed
    out += std::to_string(agg.n_seeds) + ",";
    out += csv_cell(agg.mean_price) + ",";
    out += csv_cell(agg.mean_profit) + ",";
    out += csv_cell(agg.std_profit) + ",";
    out += csv_cell(agg.mean_var_profit) + ",";
    out += csv_cell(agg.std_var_profit) + ",";
    out += ",";  // converged
    out += csv_cell(agg.theory);
    out += "\n";
}

}  // namespace

std::string render_sweep_csv(const ExperimentResult& result) {
    std::string out = kSweepHeader;
    out += "\n";
    for (const ResultRow& row : result.rows) append_row_csv(out, row);
    for (const AggregatePoint& agg : result.aggregates) append_aggregate_csv(out, agg);
    return out;
}

std::string render_nash_table_csv(const NashTableResult& table) {
    std::string out = "d,omega,x_star,p_star,stable\n";
    for (size_t i = 0; i < table.rows.size(); ++i) {
        const NashEquilibrium& eq = table.rows[i];
        out += format_csv_number(eq.d) + "," + format_csv_number(eq.omega) + "," +
               format_csv_number(eq.profit) + "," + format_csv_number(eq.price) + "," +
               (table.stable[i] ? "1" : "0") + "\n";
    }
    return out;
}

std::string render_non_pbc_trace_csv(const NonPbcDemoResult& demo) {
    std::string out = "step,firm,p0,p1,x0,x1,s0,s1\n";
    for (size_t t = 0; t < demo.trace.steps.size(); ++t) {
        const TraceStep& step = demo.trace.steps[t];
        const double s0 = step.prices(0) > 0 ? step.profits(0) / step.prices(0) : 0.0;
        const double s1 = step.prices(1) > 0 ? step.profits(1) / step.prices(1) : 0.0;
        out += std::to_string(t) + "," + std::to_string(step.firm) + "," +
               format_csv_number(step.prices(0)) + "," + format_csv_number(step.prices(1)) +
               "," + format_csv_number(step.profits(0)) + "," +
               format_csv_number(step.profits(1)) + "," + format_csv_number(s0) + "," +
               format_csv_number(s1) + "\n";
    }
    return out;
}

// ----------------------------------- JSON ------------------------------------

namespace {

json spec_to_json(const ExperimentSpec& spec) {
    json j;
    j["kind"] = kind_name(spec.kind);
    j["n_side"] = spec.n_side;
    j["r"] = spec.r;
    j["gamma"] = spec.gamma;
    j["boundary"] = spec.boundary == Boundary::periodic ? "periodic" : "open";
    j["steps"] = spec.steps;
    j["burn_in"] = spec.burn_in;
    j["method"] = spec.method == Method::grid ? "grid" : "exact";
    j["grid_points"] = spec.grid_points;
    j["price_max"] = spec.price_max;
    j["initial_price"] = spec.initial_price;
    j["epsilon"] = spec.epsilon;
    j["fit_min_m"] = spec.fit_min_m;
    j["d_values"] = spec.d_values;
    j["n_values"] = spec.n_values;
    j["m_values"] = spec.m_values;
    j["gamma_values"] = spec.gamma_values;
    j["p2_values"] = spec.p2_values;
    j["seeds"] = spec.seeds;
    j["threads"] = spec.threads;
    return j;
}

json fit_to_json(const LabeledFit& labeled) {
    json j;
    if (std::isfinite(labeled.gamma)) j["gamma"] = labeled.gamma;
    j["A"] = labeled.fit.amplitude;
    j["B"] = labeled.fit.exponent;
    j["se_A"] = labeled.fit.se_amplitude;
    j["se_B"] = labeled.fit.se_exponent;
    j["residual"] = labeled.fit.residual;
    j["n_points"] = labeled.fit.n_points;
    return j;
}

json meta_json(double wall_seconds) {
    json j;
    j["rng_algorithm"] = kRngAlgorithm;
    j["wall_clock_seconds"] = wall_seconds;
    j["timestamp_utc"] = timestamp_utc();
    j["tool"] = "hotelling";
    return j;
}

void maybe_set(json& j, const char* key, double v) {
    if (std::isfinite(v)) j[key] = v;
}

}  // namespace

std::string render_sweep_json(const ExperimentResult& result, Subcommand subcommand) {
    json j;
    j["spec"] = spec_to_json(result.spec);
    j["spec"]["subcommand"] = subcommand_name(subcommand);

    json rows = json::array();
    for (const ResultRow& row : result.rows) {
        json r;
        maybe_set(r, "d", row.d);
        if (row.n_side > 0) r["n_side"] = row.n_side;
        if (row.m > 0) r["m"] = row.m;
        maybe_set(r, "gamma", row.gamma);
        r["seed"] = row.seed;
        maybe_set(r, "mean_price", row.mean_price);
        maybe_set(r, "mean_profit", row.mean_profit);
        maybe_set(r, "var_profit", row.var_profit);
        r["converged"] = row.converged;
        maybe_set(r, "theory", row.theory);
        rows.push_back(std::move(r));
    }
    j["rows"] = std::move(rows);

    json aggs = json::array();
    for (const AggregatePoint& agg : result.aggregates) {
        json a;
        maybe_set(a, "d", agg.d);
        if (agg.n_side > 0) a["n_side"] = agg.n_side;
        if (agg.m > 0) a["m"] = agg.m;
        maybe_set(a, "gamma", agg.gamma);
        a["n_seeds"] = agg.n_seeds;
        maybe_set(a, "mean_price", agg.mean_price);
        maybe_set(a, "mean_profit", agg.mean_profit);
        maybe_set(a, "std_profit", agg.std_profit);
        maybe_set(a, "var_profit", agg.mean_var_profit);
        maybe_set(a, "std_var_profit", agg.std_var_profit);
        maybe_set(a, "theory", agg.theory);
        aggs.push_back(std::move(a));
    }
    j["aggregates"] = std::move(aggs);

    json fits = json::array();
    for (const LabeledFit& fit : result.fits) fits.push_back(fit_to_json(fit));
    j["fits"] = std::move(fits);
    if (result.fits.size() == 1) j["fit"] = fit_to_json(result.fits.front());
    maybe_set(j, "variance_slope", result.variance_slope);

    j["meta"] = meta_json(result.wall_seconds);
    return j.dump(2) + "\n";
}

// ------------------------------- dat rendering --------------------------------

namespace {

std::string render_sweep_dat(const ExperimentResult& result, Subcommand subcommand) {
    std::string out;
    switch (subcommand) {
        case Subcommand::two_firm: {
            // one block per lattice size
            int current_n = -1;
            for (const AggregatePoint& agg : result.aggregates) {
                if (agg.n_side != current_n) {
                    if (current_n != -1) out += "\n\n";
                    current_n = agg.n_side;
                    out += "# N=" + std::to_string(agg.n_side) + "\n# d mean_profit theory\n";
                }
                out += format_csv_number(agg.d) + " " + format_csv_number(agg.mean_profit) +
                       " " + format_csv_number(agg.theory) + "\n";
            }
            break;
        }
        case Subcommand::variance_scaling:
            out += "# n_side mean_var std_var\n";
            for (const AggregatePoint& agg : result.aggregates)
                out += std::to_string(agg.n_side) + " " +
                       format_csv_number(agg.mean_var_profit) + " " +
                       csv_cell(agg.std_var_profit) + "\n";
            break;
        case Subcommand::multi_firm:
            out += "# m mean_profit std_profit theory\n";
            for (const AggregatePoint& agg : result.aggregates)
                out += std::to_string(agg.m) + " " + format_csv_number(agg.mean_profit) + " " +
                       csv_cell(agg.std_profit) + " " + format_csv_number(agg.theory) + "\n";
            break;
        case Subcommand::gamma_sweep:
            out += "# gamma B se_B theory\n";
            for (const LabeledFit& fit : result.fits)
                out += format_csv_number(fit.gamma) + " " +
                       format_csv_number(fit.fit.exponent) + " " +
                       format_csv_number(fit.fit.se_exponent) + " " +
                       format_csv_number(1.0 + fit.gamma / 2.0) + "\n";
            break;
        default:
            break;
    }
    return out;
}

// grouped aggregates as figure series
svg::Figure sweep_figure(const ExperimentResult& result, Subcommand subcommand) {
    svg::Figure fig;
    switch (subcommand) {
        case Subcommand::two_firm: {
            fig.title = "Equilibrium profit per customer vs firm distance";
            fig.x_label = "d";
            fig.y_label = "X";
            std::vector<int> n_list;
            for (const AggregatePoint& a : result.aggregates)
                if (std::find(n_list.begin(), n_list.end(), a.n_side) == n_list.end())
                    n_list.push_back(a.n_side);
            for (int n : n_list) {
                svg::Series s;
                s.label = "N=" + std::to_string(n);
                s.color = "";
                s.draw_line = true;
                for (const AggregatePoint& a : result.aggregates) {
                    if (a.n_side != n) continue;
                    s.x.push_back(a.d);
                    s.y.push_back(a.mean_profit);
                    s.yerr.push_back(std::isfinite(a.std_profit) ? a.std_profit : 0.0);
                }
                fig.series.push_back(std::move(s));
            }
            svg::Series theory;
            theory.label = "analytic";
            theory.color = "#000000";
            theory.draw_line = true;
            theory.draw_points = false;
            for (int i = 1; i <= 97; ++i) {
                const double d = i / 98.0;
                theory.x.push_back(d);
                theory.y.push_back(nash_equilibrium(d, result.spec.r).profit);
            }
            fig.series.push_back(std::move(theory));
            break;
        }
        case Subcommand::variance_scaling: {
            fig.title = "Tail profit variance vs lattice side";
            fig.x_label = "N";
            fig.y_label = "var(X)";
            fig.log_x = fig.log_y = true;
            svg::Series pts;
            pts.label = "simulation";
            for (const AggregatePoint& a : result.aggregates) {
                pts.x.push_back(a.n_side);
                pts.y.push_back(a.mean_var_profit);
                pts.yerr.push_back(std::isfinite(a.std_var_profit) ? a.std_var_profit : 0.0);
            }
            fig.series.push_back(std::move(pts));
            if (!result.fits.empty()) {
                svg::Series line;
                line.label = "fit slope " + format_csv_number(result.variance_slope);
                line.color = "#d62728";
                line.draw_line = true;
                line.draw_points = false;
                const PowerLawFit& fit = result.fits.front().fit;
                for (const AggregatePoint& a : result.aggregates) {
                    line.x.push_back(a.n_side);
                    line.y.push_back(fit.amplitude / std::pow(a.n_side, fit.exponent));
                }
                fig.series.push_back(std::move(line));
            }
            break;
        }
        case Subcommand::multi_firm: {
            fig.title = "Profit per firm and customer vs firm count";
            fig.x_label = "m";
            fig.y_label = "X";
            fig.log_x = fig.log_y = true;
            svg::Series pts;
            pts.label = "simulation";
            svg::Series theory;
            theory.label = "r/m^1.5";
            theory.color = "#2ca02c";
            theory.draw_line = true;
            theory.draw_points = false;
            for (const AggregatePoint& a : result.aggregates) {
                pts.x.push_back(a.m);
                pts.y.push_back(a.mean_profit);
                pts.yerr.push_back(std::isfinite(a.std_profit) ? a.std_profit : 0.0);
                theory.x.push_back(a.m);
                theory.y.push_back(a.theory);
            }
            fig.series.push_back(std::move(pts));
            fig.series.push_back(std::move(theory));
            if (!result.fits.empty()) {
                const PowerLawFit& fit = result.fits.front().fit;
                svg::Series line;
                line.label = "fit A r/m^B";
                line.color = "#d62728";
                line.draw_line = true;
                line.draw_points = false;
                for (const AggregatePoint& a : result.aggregates) {
                    line.x.push_back(a.m);
                    line.y.push_back(fit.amplitude * result.spec.r /
                                     std::pow(a.m, fit.exponent));
                }
                fig.series.push_back(std::move(line));
            }
            break;
        }
        case Subcommand::gamma_sweep: {
            fig.title = "Profit scaling exponent vs transport cost exponent";
            fig.x_label = "gamma";
            fig.y_label = "B";
            svg::Series pts;
            pts.label = "fitted B";
            svg::Series line;
            line.label = "1 + gamma/2";
            line.color = "#000000";
            line.draw_line = true;
            line.draw_points = false;
            for (const LabeledFit& fit : result.fits) {
                pts.x.push_back(fit.gamma);
                pts.y.push_back(fit.fit.exponent);
                pts.yerr.push_back(fit.fit.se_exponent);
                line.x.push_back(fit.gamma);
                line.y.push_back(1.0 + fit.gamma / 2.0);
            }
            fig.series.push_back(std::move(pts));
            fig.series.push_back(std::move(line));
            break;
        }
        default:
            break;
    }
    return fig;
}

std::string join_path(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

}  // namespace

// --------------------------------- emitters -----------------------------------

std::vector<std::string> emit_results(const ExperimentResult& result, Subcommand subcommand,
                                      const std::vector<OutputFormat>& formats,
                                      const std::string& out_dir, const std::string& stem) {
    std::vector<std::string> written;
    for (OutputFormat format : formats) {
        switch (format) {
            case OutputFormat::csv: {
                const std::string path = join_path(out_dir, stem + ".csv");
                write_file_atomic(path, render_sweep_csv(result));
                written.push_back(path);
                break;
            }
            case OutputFormat::json: {
                const std::string path = join_path(out_dir, stem + ".json");
                write_file_atomic(path, render_sweep_json(result, subcommand));
                written.push_back(path);
                break;
            }
            case OutputFormat::dat: {
                const std::string path = join_path(out_dir, stem + ".dat");
                write_file_atomic(path, render_sweep_dat(result, subcommand));
                written.push_back(path);
                break;
            }
            case OutputFormat::svg: {
                const std::string path = join_path(out_dir, stem + ".svg");
                write_file_atomic(path, sweep_figure(result, subcommand).render());
                written.push_back(path);
                break;
            }
        }
    }
    return written;
}

std::vector<std::string> emit_results(const NashTableResult& table,
                                      const std::vector<OutputFormat>& formats,
                                      const std::string& out_dir, const std::string& stem) {
    std::vector<std::string> written;
    for (OutputFormat format : formats) {
        switch (format) {
            case OutputFormat::csv: {
                const std::string path = join_path(out_dir, stem + ".csv");
                write_file_atomic(path, render_nash_table_csv(table));
                written.push_back(path);
                break;
            }
            case OutputFormat::json: {
                json j;
                j["spec"] = spec_to_json(table.spec);
                json rows = json::array();
                for (size_t i = 0; i < table.rows.size(); ++i) {
                    const NashEquilibrium& eq = table.rows[i];
                    rows.push_back({{"d", eq.d},
                                    {"omega", eq.omega},
                                    {"x_star", eq.profit},
                                    {"p_star", eq.price},
                                    {"stable", static_cast<bool>(table.stable[i])}});
                }
                j["rows"] = std::move(rows);
                j["meta"] = meta_json(table.wall_seconds);
                const std::string path = join_path(out_dir, stem + ".json");
                write_file_atomic(path, j.dump(2) + "\n");
                written.push_back(path);
                break;
            }
            case OutputFormat::dat: {
                std::string out = "# d omega x_star p_star\n";
                for (const NashEquilibrium& eq : table.rows)
                    out += format_csv_number(eq.d) + " " + format_csv_number(eq.omega) + " " +
                           format_csv_number(eq.profit) + " " + format_csv_number(eq.price) +
                           "\n";
                const std::string path = join_path(out_dir, stem + ".dat");
                write_file_atomic(path, out);
                written.push_back(path);
                break;
            }
            case OutputFormat::svg: {
                svg::Figure fig;
                fig.title = "Two-firm equilibrium profit";
                fig.x_label = "d";
                fig.y_label = "X*";
                svg::Series s;
                s.label = "X*(d, r)";
                s.draw_line = true;
                for (const NashEquilibrium& eq : table.rows) {
                    s.x.push_back(eq.d);
                    s.y.push_back(eq.profit);
                }
                fig.series.push_back(std::move(s));
                const std::string path = join_path(out_dir, stem + ".svg");
                write_file_atomic(path, fig.render());
                written.push_back(path);
                break;
            }
        }
    }
    return written;
}

std::vector<std::string> emit_results(const NonPbcDemoResult& demo,
                                      const std::vector<OutputFormat>& formats,
                                      const std::string& out_dir, const std::string& stem) {
    std::vector<std::string> written;
    for (OutputFormat format : formats) {
        switch (format) {
            case OutputFormat::csv: {
                const std::string path = join_path(out_dir, stem + ".csv");
                write_file_atomic(path, render_non_pbc_trace_csv(demo));
                written.push_back(path);
                break;
            }
            case OutputFormat::json: {
                json j;
                j["spec"] = spec_to_json(demo.spec);
                j["d"] = demo.d;
                j["converged"] = demo.trace.converged;
                json tail;
                for (int k = 0; k < 2; ++k) {
                    tail["mean_price"].push_back(demo.trace.tail_mean_price(k));
                    tail["mean_profit"].push_back(demo.trace.tail_mean_profit(k));
                    tail["var_profit"].push_back(demo.trace.tail_var_profit(k));
                }
                j["tail"] = std::move(tail);
                json profiles = json::array();
                for (const ProfitProfile& profile : demo.profiles) {
                    Eigen::Index argmax = 0;
                    profile.profit1.maxCoeff(&argmax);
                    profiles.push_back({{"p2", profile.p2},
                                        {"argmax_p1", profile.p1(argmax)},
                                        {"max_profit", profile.profit1(argmax)},
                                        {"share_at_max", profile.share1(argmax)}});
                }
                j["profiles"] = std::move(profiles);
                j["meta"] = meta_json(demo.wall_seconds);
                const std::string path = join_path(out_dir, stem + ".json");
                write_file_atomic(path, j.dump(2) + "\n");
                written.push_back(path);
                break;
            }
            case OutputFormat::dat: {
                std::string out;
                bool first = true;
                for (const ProfitProfile& profile : demo.profiles) {
                    if (!first) out += "\n\n";
                    first = false;
                    out += "# p2=" + format_csv_number(profile.p2) + "\n# p1 profit1 share1\n";
                    for (Eigen::Index g = 0; g < profile.p1.size(); ++g)
                        out += format_csv_number(profile.p1(g)) + " " +
                               format_csv_number(profile.profit1(g)) + " " +
                               format_csv_number(profile.share1(g)) + "\n";
                }
                const std::string path = join_path(out_dir, stem + ".dat");
                write_file_atomic(path, out);
                written.push_back(path);
                break;
            }
            case OutputFormat::svg: {
                svg::Figure fig;
                fig.title = "Open-boundary profit profiles, d=" + format_csv_number(demo.d);
                fig.x_label = "p1";
                fig.y_label = "X1";
                for (const ProfitProfile& profile : demo.profiles) {
                    svg::Series s;
                    s.label = "p2=" + format_csv_number(profile.p2);
                    s.color = "";
                    s.draw_line = true;
                    s.draw_points = false;
                    // decimate for a sane file size
                    const Eigen::Index step = std::max<Eigen::Index>(1, profile.p1.size() / 800);
                    for (Eigen::Index g = 0; g < profile.p1.size(); g += step) {
                        s.x.push_back(profile.p1(g));
                        s.y.push_back(profile.profit1(g));
                    }
                    fig.series.push_back(std::move(s));
                }
                svg::Series diag;
                diag.label = "X = p1";
                diag.color = "#999999";
                diag.draw_line = true;
                diag.draw_points = false;
                diag.x = {0.0, demo.spec.price_max};
                diag.y = {0.0, demo.spec.price_max};
                fig.series.push_back(std::move(diag));
                const std::string path = join_path(out_dir, stem + ".svg");
                write_file_atomic(path, fig.render());
                written.push_back(path);
                break;
            }
        }
    }
    return written;
}

std::vector<std::string> emit_assign_map(const MarketConfig& config, const Assignment& assignment,
                                         const std::vector<OutputFormat>& formats,
                                         const std::string& out_dir, const std::string& stem) {
    std::vector<std::string> written;
    const int n = config.n_side;
    for (OutputFormat format : formats) {
        switch (format) {
            case OutputFormat::csv: {
                std::string out = "x,y,firm\n";
                for (int j = 0; j < n; ++j)
                    for (int i = 0; i < n; ++i)
                        out += format_csv_number(customer_coord(i, n)) + "," +
                               format_csv_number(customer_coord(j, n)) + "," +
                               std::to_string(assignment.owner(i, j)) + "\n";
                const std::string path = join_path(out_dir, stem + ".csv");
                write_file_atomic(path, out);
                written.push_back(path);
                break;
            }
            case OutputFormat::json: {
                json j;
                j["n_side"] = config.n_side;
                j["r"] = config.r;
                j["gamma"] = config.gamma;
                j["boundary"] = config.boundary == Boundary::periodic ? "periodic" : "open";
                json firms = json::array();
                for (const FirmState& f : config.firms)
                    firms.push_back(
                        {{"id", f.id}, {"x", f.position.x}, {"y", f.position.y},
                         {"price", f.price}});
                j["firms"] = std::move(firms);
                j["counts"] = std::vector<int>(assignment.counts.data(),
                                               assignment.counts.data() + assignment.counts.size());
                j["shares"] = std::vector<double>(
                    assignment.shares.data(), assignment.shares.data() + assignment.shares.size());
                j["profits"] = std::vector<double>(
                    assignment.profits.data(),
                    assignment.profits.data() + assignment.profits.size());
                j["meta"] = meta_json(0.0);
                const std::string path = join_path(out_dir, stem + ".json");
                write_file_atomic(path, j.dump(2) + "\n");
                written.push_back(path);
                break;
            }
            case OutputFormat::dat: {
                // row j holds the firm ids of lattice row y_j, x ascending
                std::string out;
                for (int j = 0; j < n; ++j) {
                    for (int i = 0; i < n; ++i) {
                        out += std::to_string(assignment.owner(i, j));
                        out += i + 1 < n ? ' ' : '\n';
                    }
                }
                const std::string path = join_path(out_dir, stem + ".dat");
                write_file_atomic(path, out);
                written.push_back(path);
                break;
            }
            case OutputFormat::svg: {
                std::vector<std::pair<double, double>> positions;
                for (const FirmState& f : config.firms)
                    positions.emplace_back(f.position.x, f.position.y);
                const std::string title =
                    std::string("Customer assignment, ") +
                    (config.boundary == Boundary::periodic ? "periodic" : "open") +
                    " boundary";
                const std::string path = join_path(out_dir, stem + ".svg");
                write_file_atomic(path, svg::render_assignment_map(assignment.owner, positions,
                                                                   title));
                written.push_back(path);
                break;
            }
        }
    }
    return written;
}

// ---------------------------------- parsing -----------------------------------

namespace {

struct RawFlags {
    std::string d, n_side, m, gamma, seeds, p2, formats;
    std::string method, boundary, out_dir;
    std::vector<std::string> firms;
    double r = 1.0, price_max = 1.0, initial_price = 0.3;
    long long steps = 120, burn_in = 80, grid_points = 10000, fit_min_m = 8, threads = 0;
};

std::vector<OutputFormat> parse_formats(const std::string& text) {
    std::vector<OutputFormat> out;
    for (const std::string& token : split(text, ',')) {
        if (token == "csv")
            out.push_back(OutputFormat::csv);
        else if (token == "json")
            out.push_back(OutputFormat::json);
        else if (token == "dat")
            out.push_back(OutputFormat::dat);
        else if (token == "svg")
            out.push_back(OutputFormat::svg);
        else
            throw CliUsageError("--formats: unknown format '" + token +
                                "' (expected csv, json, dat, svg)");
    }
    if (out.empty()) throw CliUsageError("--formats: list must be nonempty");
    return out;
}

FirmState parse_firm(const std::string& text, int id) {
    const auto parts = split(text, ',');
    if (parts.size() != 3)
        throw CliUsageError("--firm: expected x,y,price but got '" + text + "'");
    const double x = parse_one_double(parts[0], "--firm");
    const double y = parse_one_double(parts[1], "--firm");
    const double price = parse_one_double(parts[2], "--firm");
    if (price < 0.0) throw CliUsageError("--firm: price must be >= 0");
    return FirmState{id, Point(x, y), price};
}

}  // namespace

CliInvocation parse_and_validate(const std::vector<std::string>& args) {
    CLI::App app{"Spatial price competition on the unit square: simulation and analytics"};
    app.require_subcommand(1);

    RawFlags raw;

    auto add_output_flags = [&raw](CLI::App* sub) {
        sub->add_option("--out-dir", raw.out_dir, "output directory (default .)");
        sub->add_option("--formats", raw.formats,
                        "comma list of outputs: csv,json,dat,svg (default csv,json)");
        sub->add_option("--threads", raw.threads, "worker threads (default: all cores)");
    };
    auto add_dynamics_flags = [&raw](CLI::App* sub, bool with_gamma = true) {
        sub->add_option("--r", raw.r, "transport cost rate (default 1)");
        if (with_gamma) sub->add_option("--gamma", raw.gamma, "distance exponent (default 1)");
        sub->add_option("--steps", raw.steps, "alternation steps (two-firm count)");
        sub->add_option("--burn-in", raw.burn_in, "steps excluded from tail statistics");
        sub->add_option("--initial-price", raw.initial_price, "starting price (default 0.3)");
        sub->add_option("--method", raw.method, "best-response search: grid or exact")
            ->check(CLI::IsMember({"grid", "exact"}));
        sub->add_option("--grid-points", raw.grid_points,
                        "price grid resolution for the grid method");
        sub->add_option("--price-max", raw.price_max, "grid method price cap (default 1)");
        sub->add_option("--boundary", raw.boundary, "periodic or open")
            ->check(CLI::IsMember({"periodic", "open"}));
        sub->add_option("--seeds", raw.seeds, "realization seeds, list or start:stop:count");
    };

    CLI::App* two_firm = app.add_subcommand(
        "two-firm", "Fixed pair at distance d vs the closed-form equilibrium");
    two_firm->add_option("--d", raw.d, "firm distances, list or start:stop:count");
    two_firm->add_option("--n-side", raw.n_side, "customer lattice sides, list");
    add_dynamics_flags(two_firm);
    add_output_flags(two_firm);

    CLI::App* variance = app.add_subcommand(
        "variance-scaling", "Tail profit variance vs lattice size with log-log slope");
    variance->add_option("--d", raw.d, "firm distance (default 0.5)");
    variance->add_option("--n-side", raw.n_side, "lattice sides to sweep, list");
    add_dynamics_flags(variance);
    add_output_flags(variance);

    CLI::App* multi = app.add_subcommand(
        "multi-firm", "Randomly placed firms: profit scaling in the firm count");
    multi->add_option("--m", raw.m, "firm counts to sweep, list");
    multi->add_option("--n-side", raw.n_side, "customer lattice side (default 80)");
    multi->add_option("--fit-min-m", raw.fit_min_m, "smallest m included in the fit");
    add_dynamics_flags(multi);
    add_output_flags(multi);

    CLI::App* gamma_sweep = app.add_subcommand(
        "gamma-sweep", "Profit scaling exponent across transport cost exponents");
    gamma_sweep->add_option("--m", raw.m, "firm counts to sweep, list");
    gamma_sweep->add_option("--gamma", raw.gamma, "gamma values to sweep, list");
    gamma_sweep->add_option("--n-side", raw.n_side, "customer lattice side (default 80)");
    gamma_sweep->add_option("--fit-min-m", raw.fit_min_m, "smallest m included in the fit");
    add_dynamics_flags(gamma_sweep, /*with_gamma=*/false);
    add_output_flags(gamma_sweep);

    CLI::App* non_pbc = app.add_subcommand(
        "non-pbc-demo", "Open-boundary price cycling and multimodal profit profiles");
    non_pbc->add_option("--d", raw.d, "firm distance (default 0.5)");
    non_pbc->add_option("--p2", raw.p2, "rival prices for X1(p1|p2) profiles");
    non_pbc->add_option("--n-side", raw.n_side, "customer lattice side (default 80)");
    add_dynamics_flags(non_pbc);
    add_output_flags(non_pbc);

    CLI::App* nash = app.add_subcommand(
        "nash-table", "Closed-form omega, X*, p* and stability over d");
    nash->add_option("--d", raw.d, "distances, list or start:stop:count");
    nash->add_option("--r", raw.r, "transport cost rate (default 1)");
    add_output_flags(nash);

    CLI::App* assign = app.add_subcommand(
        "assign-map", "Customer-to-firm assignment map for a fixed instance");
    assign->add_option("--firm", raw.firms,
                       "firm as x,y,price (repeatable; default: the two-firm example)");
    assign->add_option("--n-side", raw.n_side, "customer lattice side (default 80)");
    assign->add_option("--r", raw.r, "transport cost rate (default 1)");
    assign->add_option("--gamma", raw.gamma, "distance exponent (default 1)");
    assign->add_option("--boundary", raw.boundary, "periodic or open")
        ->check(CLI::IsMember({"periodic", "open"}));
    add_output_flags(assign);

    std::vector<const char*> argv;
    argv.push_back("hotelling");
    for (const std::string& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        const auto chosen = app.get_subcommands();
        throw CliHelp{chosen.empty() ? app.help() : chosen.front()->help()};
    } catch (const CLI::ParseError& e) {
        throw CliUsageError(e.what());
    }

    CLI::App* sub = app.get_subcommands().front();
    CliInvocation inv;
    if (sub == two_firm)
        inv.subcommand = Subcommand::two_firm;
    else if (sub == variance)
        inv.subcommand = Subcommand::variance_scaling;
    else if (sub == multi)
        inv.subcommand = Subcommand::multi_firm;
    else if (sub == gamma_sweep)
        inv.subcommand = Subcommand::gamma_sweep;
    else if (sub == non_pbc)
        inv.subcommand = Subcommand::non_pbc_demo;
    else if (sub == nash)
        inv.subcommand = Subcommand::nash_table;
    else
        inv.subcommand = Subcommand::assign_map;

    static const std::map<Subcommand, ExperimentKind> kKindOf = {
        {Subcommand::two_firm, ExperimentKind::two_firm_sweep},
        {Subcommand::variance_scaling, ExperimentKind::variance_scaling},
        {Subcommand::multi_firm, ExperimentKind::multi_firm_sweep},
        {Subcommand::gamma_sweep, ExperimentKind::gamma_sweep},
        {Subcommand::non_pbc_demo, ExperimentKind::non_pbc_demo},
        {Subcommand::nash_table, ExperimentKind::nash_table},
    };
    ExperimentSpec spec = default_spec(inv.subcommand == Subcommand::assign_map
                                           ? ExperimentKind::two_firm_sweep
                                           : kKindOf.at(inv.subcommand));

    auto seen = [&](const char* flag) {
        const CLI::Option* option = sub->get_option_no_throw(flag);
        return option != nullptr && option->count() > 0;
    };

    if (seen("--r")) spec.r = raw.r;
    if (!(spec.r > 0.0)) throw CliUsageError("--r: must be > 0");

    if (inv.subcommand == Subcommand::gamma_sweep) {
        if (seen("--gamma")) spec.gamma_values = parse_double_list(raw.gamma, "--gamma");
        for (double g : spec.gamma_values)
            if (!(g > 0.0)) throw CliUsageError("--gamma: values must be > 0");
    } else if (seen("--gamma")) {
        const auto values = parse_double_list(raw.gamma, "--gamma");
        if (values.size() != 1) throw CliUsageError("--gamma: expected a single value here");
        spec.gamma = values.front();
        if (!(spec.gamma > 0.0)) throw CliUsageError("--gamma: must be > 0");
    }

    if (seen("--d")) spec.d_values = parse_double_list(raw.d, "--d");
    for (double d : spec.d_values)
        if (!(d > 0.0) || !(d < 1.0)) throw CliUsageError("--d: values must lie in (0, 1)");

    if (seen("--n-side")) {
        const auto values = parse_int_list(raw.n_side, "--n-side");
        for (int n : values)
            if (n < 1) throw CliUsageError("--n-side: values must be >= 1");
        if (inv.subcommand == Subcommand::two_firm ||
            inv.subcommand == Subcommand::variance_scaling) {
            spec.n_values = values;
            spec.n_side = values.front();
        } else {
            if (values.size() != 1)
                throw CliUsageError("--n-side: expected a single value here");
            spec.n_side = values.front();
        }
    }

    if (seen("--m")) {
        spec.m_values = parse_int_list(raw.m, "--m");
        for (int m : spec.m_values)
            if (m < 2) throw CliUsageError("--m: values must be >= 2");
    }
    if (seen("--p2")) {
        spec.p2_values = parse_double_list(raw.p2, "--p2");
        for (double p : spec.p2_values)
            if (p < 0.0) throw CliUsageError("--p2: values must be >= 0");
    }
    if (seen("--seeds")) spec.seeds = parse_seed_list(raw.seeds, "--seeds");

    if (seen("--steps")) spec.steps = static_cast<int>(raw.steps);
    if (seen("--burn-in")) spec.burn_in = static_cast<int>(raw.burn_in);
    if (spec.steps < 1) throw CliUsageError("--steps: must be >= 1");
    if (spec.burn_in < 0) throw CliUsageError("--burn-in: must be >= 0");
    if (spec.burn_in >= spec.steps) throw CliUsageError("--burn-in: burn-in must be < steps");

    if (seen("--initial-price")) spec.initial_price = raw.initial_price;
    if (!(spec.initial_price >= 0.0)) throw CliUsageError("--initial-price: must be >= 0");
    if (seen("--method")) spec.method = raw.method == "grid" ? Method::grid : Method::exact;
    if (seen("--grid-points")) spec.grid_points = static_cast<int>(raw.grid_points);
    if (spec.grid_points < 2) throw CliUsageError("--grid-points: must be >= 2");
    if (seen("--price-max")) spec.price_max = raw.price_max;
    if (!(spec.price_max > 0.0)) throw CliUsageError("--price-max: must be > 0");
    if (seen("--boundary"))
        spec.boundary = raw.boundary == "open" ? Boundary::open : Boundary::periodic;
    if (seen("--fit-min-m")) spec.fit_min_m = static_cast<int>(raw.fit_min_m);
    if (spec.fit_min_m < 0) throw CliUsageError("--fit-min-m: must be >= 0");
    if (seen("--threads")) spec.threads = static_cast<int>(raw.threads);
    if (spec.threads < 0) throw CliUsageError("--threads: must be >= 0");

    if (seen("--out-dir")) inv.out_dir = raw.out_dir;
    if (seen("--formats")) inv.formats = parse_formats(raw.formats);

    if (inv.subcommand == Subcommand::assign_map) {
        if (raw.firms.empty()) {
            inv.map_firms = {FirmState{0, Point(0.2, 0.5), 0.8},
                             FirmState{1, Point(0.5, 0.5), 1.0}};
        } else {
            for (size_t i = 0; i < raw.firms.size(); ++i)
                inv.map_firms.push_back(parse_firm(raw.firms[i], static_cast<int>(i)));
        }
    } else {
        try {
            spec.validate();
        } catch (const std::invalid_argument& e) {
            throw CliUsageError(e.what());
        }
    }

    inv.spec = spec;
    return inv;
}

// ---------------------------------- running -----------------------------------

int run_invocation(const CliInvocation& invocation, std::ostream& out, std::ostream& err) {
    try {
        const std::string stem =
            std::string(subcommand_name(invocation.subcommand)) + "_" + timestamp_utc();
        std::vector<std::string> written;
        switch (invocation.subcommand) {
            case Subcommand::two_firm:
                written = emit_results(run_two_firm_sweep(invocation.spec), invocation.subcommand,
                                       invocation.formats, invocation.out_dir, stem);
                break;
            case Subcommand::variance_scaling:
                written = emit_results(run_variance_scaling(invocation.spec),
                                       invocation.subcommand, invocation.formats,
                                       invocation.out_dir, stem);
                break;
            case Subcommand::multi_firm:
                written = emit_results(run_multi_firm_sweep(invocation.spec),
                                       invocation.subcommand, invocation.formats,
                                       invocation.out_dir, stem);
                break;
            case Subcommand::gamma_sweep:
                written = emit_results(run_gamma_sweep(invocation.spec), invocation.subcommand,
                                       invocation.formats, invocation.out_dir, stem);
                break;
            case Subcommand::non_pbc_demo:
                written = emit_results(run_non_pbc_demo(invocation.spec), invocation.formats,
                                       invocation.out_dir, stem);
                break;
            case Subcommand::nash_table:
                written = emit_results(run_nash_table(invocation.spec), invocation.formats,
                                       invocation.out_dir, stem);
                break;
            case Subcommand::assign_map: {
                MarketConfig config;
                config.n_side = invocation.spec.n_side;
                config.r = invocation.spec.r;
                config.gamma = invocation.spec.gamma;
                config.boundary = invocation.spec.boundary;
                config.firms = invocation.map_firms;
                const Assignment assignment = assign_customers(config);
                written = emit_assign_map(config, assignment, invocation.formats,
                                          invocation.out_dir, stem);
                break;
            }
        }
        for (const std::string& path : written) out << "wrote " << path << "\n";
        return 0;
    } catch (const std::exception& e) {
        err << subcommand_name(invocation.subcommand) << ": " << e.what() << "\n";
        return 1;
    }
}

}  // namespace hotelling
