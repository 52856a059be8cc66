#pragma once

// JSON run configuration for the command-line tool.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rdcert/dynamics.hpp"
#include "rdcert/envelope.hpp"
#include "rdcert/error.hpp"
#include "rdcert/lmi.hpp"
#include "rdcert/models.hpp"
#include "rdcert/sdpfeas.hpp"
#include "rdcert/spectral.hpp"

namespace rdcert::app {

using nlohmann::json;

/// Bad configuration; the message starts with the JSON path of the offending entry.
struct ConfigError : Error {
  using Error::Error;
};

struct ModelSpec {
  std::string name;  ///< goodwin | goldbeter | fhn | linear | lure | explicit
  GoodwinParams goodwin;
  GoldbeterParams goldbeter;
  bool overparameterized = false;
  FhnParams fhn;
  Mat a;  ///< linear and lure
  std::vector<double> b, c;
  double gamma = 1.0;
  Envelope envelope;  ///< explicit only

  Envelope build_envelope() const;
  /// Throws Unsupported for explicit envelopes (no vector field).
  Model build_model() const;
  std::size_t dim() const;
};

struct SpatialSpec {
  enum class Source { kNone, kValue, kDomain, kGraph };
  Source source = Source::kNone;
  double value = 0.0;
  /// lambda2 given next to a domain or graph; used instead of the computed value.
  std::optional<double> given;
  DomainSpec domain;
  Graph graph;
  bool overridden = false;  ///< value came from --lambda2
};

struct ThresholdSpec {
  std::optional<double> lo, hi;
  double tol = 1e-4;
  std::vector<Structure> structures;  ///< empty: the run's structure
};

struct SimSpec {
  double t_end = 10.0;
  double dt = 0.0;
  double output_dt = 0.0;
  std::size_t m = 128;
  double length = 0.0;  ///< 0: from the domain, or pi / sqrt(lambda2)
  Stepper stepper = Stepper::kSplitCn;
  std::size_t threads = 1;
  json init;
  std::string certificate;  ///< path of a certify report providing P
  bool certify = false;     ///< run certify first and use its P
  double decay_factor = 1e-6;
  std::optional<double> fit_t0, fit_t1;
  bool record_states = false;
};

struct RunConfig {
  json echo;  ///< the effective configuration, after command-line overrides
  std::filesystem::path base_dir;
  ModelSpec model;
  Mat d;
  SpatialSpec spatial;
  std::string method = "vertex";
  Structure structure = Structure::kFull;
  SolveOptions solver;
  ThresholdSpec threshold;
  SimSpec sim;

  /// Resolved lambda2 and a description of where it came from.
  double lambda2() const;
  std::string lambda2_source() const;
};

struct Overrides {
  std::optional<std::string> method, structure;
  std::optional<double> lambda2;
  std::optional<std::uint64_t> seed;
};

RunConfig parse_config(json j, const std::filesystem::path& base_dir, const Overrides& ov = {});
RunConfig load_config(const std::filesystem::path& path, const Overrides& ov = {});

/// Parses a model-free spatial block (used by the spectral command).
SpatialSpec parse_spatial(const json& j, const std::filesystem::path& base_dir, const std::string& path);

}  // namespace rdcert::app
