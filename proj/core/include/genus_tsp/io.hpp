#pragma once

#include <chrono>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <json.hpp>

#include "genus_tsp/embeddings.hpp"
#include "genus_tsp/geodesic.hpp"
#include "genus_tsp/metric.hpp"
#include "genus_tsp/ptas.hpp"
#include "genus_tsp/surface.hpp"

namespace gts {

// 17 significant digits, round-trip safe.
std::string format_double(double v);

// Serializes with insertion-order keys and format_double for every number, so
// repeated runs produce byte-identical files.
std::string dump_canonical(const nlohmann::ordered_json& j);

nlohmann::ordered_json surface_to_json(const Surface& s);
Surface surface_from_json(const nlohmann::json& j);

nlohmann::ordered_json cities_to_json(const std::vector<Vec2>& cities,
                                      const std::vector<std::string>& labels = {});
std::vector<Vec2> cities_from_json(const nlohmann::json& j,
                                   std::vector<std::string>* labels = nullptr);

nlohmann::ordered_json tour_to_json(const Tour& tour, const PtasParams& params);

nlohmann::ordered_json certificates_to_json(const EmbeddingResult& res);

// TSV with a header row of query labels; the certificate sidecar
// {"t","t_q","epsilon"} goes to `path` + ".meta.json".
void write_distance_table(const std::string& path, const DistanceTable& table,
                          const std::vector<std::string>& labels);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);
nlohmann::json load_json(const std::string& path);

// Git-style content hash: sha1 of "blob <size>\0<content>", hex-encoded.
std::string content_hash(const std::string& bytes);

struct RunRecord {
  nlohmann::ordered_json config;                       // echo of the run config
  std::vector<std::pair<std::string, std::string>> input_hashes;
  nlohmann::ordered_json results;
  std::vector<std::pair<std::string, double>> timings;  // stage -> seconds

  nlohmann::ordered_json to_json() const;
};

// Wall-clock stage timer appending into a RunRecord.
class StageTimer {
 public:
  explicit StageTimer(RunRecord& rec) : rec_(rec) {}
  template <typename F>
  auto run(const std::string& stage, F&& f) {
    auto t0 = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      rec_.timings.emplace_back(stage, elapsed(t0));
    } else {
      auto out = f();
      rec_.timings.emplace_back(stage, elapsed(t0));
      return out;
    }
  }

 private:
  static double elapsed(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  }
  RunRecord& rec_;
};

}  // namespace gts
