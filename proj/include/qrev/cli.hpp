#pragma once

#include <cstdint>
#include <iosfwd>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "qrev/error.hpp"
#include "qrev/models.hpp"
#include "qrev/network.hpp"
#include "qrev/self_reacting.hpp"
#include "qrev/symmetric.hpp"

namespace qrev::cli {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kInputError = 2, kSolverFailure = 3 };

class SchemaError : public Error {
 public:
  SchemaError(std::string path, std::string reason);
  const std::string& path() const noexcept { return path_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::string path_;
  std::string reason_;
};

struct TruncationSpec {
  std::optional<int> bound;
  std::vector<int> bounds;
  bool operator==(const TruncationSpec&) const = default;
};

struct SolverSpec {
  std::string method = "auto";  // auto | direct | power
  double tol = 1e-9;            // power-iteration change tolerance
  std::size_t max_iter = 5'000'000;
  bool operator==(const SolverSpec&) const = default;
};

struct SimSpec {
  std::optional<double> horizon;
  std::size_t events = 100'000;  // labeled events to collect when no horizon is set
  std::optional<std::uint64_t> seed;
  std::size_t replications = 1;
  std::string label = "d";
  bool operator==(const SimSpec&) const = default;
};

/// Parsed model file. `model` keeps the kind's parameters with defaults filled
/// in and states normalized to coordinate arrays, so printing and reparsing
/// reproduces the same value.
struct ModelSpecFile {
  std::string kind;
  nlohmann::json model;
  TruncationSpec truncation;
  std::vector<std::string> checks;
  SolverSpec solver;
  SimSpec sim;
  bool operator==(const ModelSpecFile&) const = default;
};

const std::vector<std::string>& model_kinds();
const std::vector<std::string>& check_names();
const std::vector<std::string>& commands();

/// Throws SchemaError(path, reason) on the first problem found.
ModelSpecFile parse_spec(const std::string& text);
ModelSpecFile parse_spec_document(const nlohmann::json& doc);
nlohmann::json to_json(const ModelSpecFile& spec);
std::string print_spec(const ModelSpecFile& spec);
/// FNV-1a 64 of print_spec, as 16 hex digits.
std::string spec_hash(const ModelSpecFile& spec);

struct BuiltModel {
  QueueModel model;
  std::optional<SelfReactingModel> self_reacting;
  std::optional<SymmetricQueueParams> symmetric;
  std::optional<Network> network;
  int n_max = 0;
};

BuiltModel build_model(const ModelSpecFile& spec);

struct RunOptions {
  std::string command;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
};

struct RunResult {
  int exit_code = kOk;
  nlohmann::json report;
};

/// Never throws for model or solver problems: they become an "error" object
/// in the report together with the matching exit code.
RunResult run(const ModelSpecFile& spec, const RunOptions& options);

/// qrev <command> --spec FILE [--out DIR] [--seed N] [--tol X]
int main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace qrev::cli
