#pragma once

#include "hotelling/experiments.hpp"

#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hotelling {

enum class Subcommand {
    two_firm,
    variance_scaling,
    multi_firm,
    gamma_sweep,
    non_pbc_demo,
    nash_table,
    assign_map,
};

enum class OutputFormat { csv, json, dat, svg };

struct CliUsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown when --help is requested; carries the help text.
struct CliHelp {
    std::string text;
};

struct CliInvocation {
    Subcommand subcommand = Subcommand::two_firm;
    ExperimentSpec spec;
    std::vector<FirmState> map_firms;  // assign-map instance
    std::string out_dir = ".";
    std::vector<OutputFormat> formats = {OutputFormat::csv, OutputFormat::json};
};

/// Parse a full argv (program name excluded) into a validated invocation.
/// Throws CliUsageError naming the offending flag, or CliHelp.
CliInvocation parse_and_validate(const std::vector<std::string>& args);

/// Run the invocation and write every requested output file.
/// Returns 0 iff all outputs were written; prints one line per file to `out`
/// and a single-line diagnostic to `err` on failure.
int run_invocation(const CliInvocation& invocation, std::ostream& out, std::ostream& err);

// ------------------------- list parsing and emission -------------------------

/// "a,b,c" enumerations or "start:stop:count" ranges with inclusive endpoints.
std::vector<double> parse_double_list(const std::string& text, const std::string& flag);
std::vector<int> parse_int_list(const std::string& text, const std::string& flag);
std::vector<uint64_t> parse_seed_list(const std::string& text, const std::string& flag);

/// CSV numeric formatting: 9 significant digits.
std::string format_csv_number(double v);

/// Minimal RFC-style CSV reader for round-trip checks (no embedded commas).
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

/// Write-temp-then-rename; never leaves a truncated file at `path`.
void write_file_atomic(const std::string& path, const std::string& content);

// CSV/JSON/dat/svg renderers, exposed so tests can pin the schemas.
std::string render_sweep_csv(const ExperimentResult& result);
std::string render_sweep_json(const ExperimentResult& result, Subcommand subcommand);
std::string render_nash_table_csv(const NashTableResult& table);
std::string render_non_pbc_trace_csv(const NonPbcDemoResult& demo);

/// Emit every requested format for one result; returns the written paths.
std::vector<std::string> emit_results(const ExperimentResult& result, Subcommand subcommand,
                                      const std::vector<OutputFormat>& formats,
                                      const std::string& out_dir, const std::string& stem);
std::vector<std::string> emit_results(const NashTableResult& table,
                                      const std::vector<OutputFormat>& formats,
                                      const std::string& out_dir, const std::string& stem);
std::vector<std::string> emit_results(const NonPbcDemoResult& demo,
                                      const std::vector<OutputFormat>& formats,
                                      const std::string& out_dir, const std::string& stem);
std::vector<std::string> emit_assign_map(const MarketConfig& config, const Assignment& assignment,
                                         const std::vector<OutputFormat>& formats,
                                         const std::string& out_dir, const std::string& stem);

const char* subcommand_name(Subcommand subcommand);

}  // namespace hotelling
