#include "run_info.hpp"

#include <lrlasso/common.hpp>

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <iostream>
#include <sstream>

namespace lrlasso::cli {

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &length, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open input file '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

Json collect_flags(const CLI::App& app) {
  Json flags = Json::object();
  for (const CLI::Option* opt : app.get_options()) {
    std::string name = opt->get_single_name();
    if (name.empty() || name == "help") continue;
    if (opt->count() > 0) {
      const auto& results = opt->results();
      if (results.empty()) {
        flags[name] = "true";
      } else {
        flags[name] = results.size() == 1 ? Json(results.front()) : Json(results);
      }
    } else {
      const std::string def = opt->get_default_str();
      flags[name] = def.empty() ? Json(nullptr) : Json(def);
    }
  }
  return flags;
}

Json run_json(const RunInfo& info) {
  Json run;
  run["tool"] = "lrlasso";
  run["version"] = LRLASSO_VERSION;
  run["command"] = info.command;
  run["seed"] = info.seed;
  run["input_sha256"] = info.input_sha256.empty() ? Json(nullptr) : Json(info.input_sha256);
  run["flags"] = info.flags;
  return run;
}

std::string tsv_header(const RunInfo& info, const Json& extra) {
  std::ostringstream line;
  line << "# tool=lrlasso version=" << LRLASSO_VERSION << " command=" << info.command << " seed=" << info.seed
       << " input_sha256=" << (info.input_sha256.empty() ? "none" : info.input_sha256);
  for (const auto& [key, value] : extra.items()) line << ' ' << key << '=' << value.dump();
  line << " flags=" << info.flags.dump() << '\n';
  return line.str();
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write output file '" + path + "'");
  out << content;
  if (!out) throw Error("failed writing '" + path + "'");
}

}  // namespace lrlasso::cli
