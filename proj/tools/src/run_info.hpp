#pragma once

#include <json.hpp>

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <string>

namespace lrlasso::cli {

using Json = nlohmann::ordered_json;

// Everything an output file needs to be traced back to the exact run.
struct RunInfo {
  std::string command;
  Json flags = Json::object();
  std::uint64_t seed = 0;
  std::string input_sha256;  // empty when the command reads no input
};

std::string sha256_hex(std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

// Flag values as parsed, defaults included, keyed by long name.
Json collect_flags(const CLI::App& app);

Json run_json(const RunInfo& info);

// "# key=value ..." header line for TSV outputs. Values are JSON-encoded so
// the line stays on one row.
std::string tsv_header(const RunInfo& info, const Json& extra = Json::object());

// Writes to `path`, or to stdout when path is "-".
void write_output(const std::string& path, const std::string& content);

}  // namespace lrlasso::cli
