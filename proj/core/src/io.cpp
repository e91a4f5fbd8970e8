#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "genus_tsp/io.hpp"

namespace gts {

std::string format_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

void dump_rec(const nlohmann::ordered_json& j, std::string& out) {
  switch (j.type()) {
    case nlohmann::json::value_t::object: {
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        out += nlohmann::json(it.key()).dump();
        out += ':';
        dump_rec(it.value(), out);
      }
      out += '}';
      break;
    }
    case nlohmann::json::value_t::array: {
      out += '[';
      for (size_t i = 0; i < j.size(); ++i) {
        if (i) out += ',';
        dump_rec(j[i], out);
      }
      out += ']';
      break;
    }
    case nlohmann::json::value_t::number_float:
      out += format_double(j.get<double>());
      break;
    default:
      out += j.dump();
  }
}

}  // namespace

std::string dump_canonical(const nlohmann::ordered_json& j) {
  std::string out;
  dump_rec(j, out);
  out += '\n';
  return out;
}

nlohmann::ordered_json surface_to_json(const Surface& s) {
  nlohmann::ordered_json out;
  out["side"] = s.base.side;
  nlohmann::ordered_json pairs = nlohmann::ordered_json::array();
  for (const auto& wp : s.base.wormholes) {
    auto rect = [](const Rect& r) {
      return nlohmann::ordered_json{{"x", r.x}, {"y", r.y}, {"side", r.side}};
    };
    pairs.push_back({{"rim1", rect(wp.rim1)}, {"rim2", rect(wp.rim2)}});
  }
  out["wormholes"] = std::move(pairs);
  out["height_field"] = s.field ? s.field->to_json()
                                : ZeroField{}.to_json();
  return out;
}

Surface surface_from_json(const nlohmann::json& j) {
  Surface s;
  s.base.side = j.at("side").get<double>();
  for (const auto& wj : j.at("wormholes")) {
    auto rect = [](const nlohmann::json& r) {
      return Rect{r.at("x").get<double>(), r.at("y").get<double>(),
                  r.at("side").get<double>()};
    };
    s.base.wormholes.push_back({rect(wj.at("rim1")), rect(wj.at("rim2"))});
  }
  validate(s.base);
  s.field = j.contains("height_field") ? field_from_json(j.at("height_field"))
                                       : std::make_shared<ZeroField>();
  return s;
}

nlohmann::ordered_json cities_to_json(const std::vector<Vec2>& cities,
                                      const std::vector<std::string>& labels) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (size_t i = 0; i < cities.size(); ++i) {
    std::string label =
        i < labels.size() ? labels[i] : "c" + std::to_string(i);
    out.push_back({{"x", cities[i].x}, {"y", cities[i].y}, {"label", label}});
  }
  return out;
}

std::vector<Vec2> cities_from_json(const nlohmann::json& j,
                                   std::vector<std::string>* labels) {
  std::vector<Vec2> out;
  for (const auto& cj : j) {
    out.push_back({cj.at("x").get<double>(), cj.at("y").get<double>()});
    if (labels)
      labels->push_back(cj.contains("label") ? cj["label"].get<std::string>()
                                             : "");
  }
  return out;
}

nlohmann::ordered_json tour_to_json(const Tour& tour, const PtasParams& params) {
  nlohmann::ordered_json out;
  out["order"] = tour.order;
  out["length"] = tour.length;
  out["params"] = {
      {"mode",
       params.mode == PtasParams::Mode::theory ? "theory" : "engineering"},
      {"t", params.t},
      {"s", params.s},
      {"r", params.r},
      {"m", params.m},
      {"eps1", params.eps1},
      {"t1", params.t1}};
  out["shift"] = {tour.shift_a, tour.shift_b};
  out["city_cycle_length"] = tour.city_cycle_length;
  return out;
}

nlohmann::ordered_json certificates_to_json(const EmbeddingResult& res) {
  nlohmann::ordered_json out;
  out["alpha"] = res.alpha;
  out["clearance"] = res.clearance;
  out["tau"] = res.tau;
  out["recursion_depth"] = res.recursion_depth;
  out["max_net_size"] = res.max_net_size;
  nlohmann::ordered_json pairs = nlohmann::ordered_json::array();
  for (const auto& c : res.certificates)
    pairs.push_back({{"i", c.i},
                     {"j", c.j},
                     {"target", c.target},
                     {"measured", c.measured}});
  out["pairs"] = std::move(pairs);
  return out;
}

void write_distance_table(const std::string& path, const DistanceTable& table,
                          const std::vector<std::string>& labels) {
  size_t q = table.query_nodes.size();
  if (labels.size() != q)
    throw std::invalid_argument("one label per query required");
  std::string tsv;
  for (size_t i = 0; i < q; ++i) {
    tsv += labels[i];
    tsv += i + 1 < q ? '\t' : '\n';
  }
  if (q == 0) tsv += '\n';
  for (size_t i = 0; i < q; ++i) {
    for (size_t j = 0; j < q; ++j) {
      tsv += format_double(table.at(i, j));
      tsv += j + 1 < q ? '\t' : '\n';
    }
  }
  write_file(path, tsv);
  nlohmann::ordered_json meta{
      {"t", table.t}, {"t_q", table.t_q}, {"epsilon", table.epsilon}};
  write_file(path + ".meta.json", dump_canonical(meta));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

nlohmann::json load_json(const std::string& path) {
  return nlohmann::json::parse(read_file(path));
}

// ------------------------------------------------------------------- sha1

namespace {

struct Sha1 {
  uint32_t h[5] = {0x67452301u, 0xEFCDAB89u, 0x98BADCFEu, 0x10325476u,
                   0xC3D2E1F0u};
  static uint32_t rol(uint32_t v, int s) { return (v << s) | (v >> (32 - s)); }

  void block(const unsigned char* p) {
    uint32_t w[80];
    for (int i = 0; i < 16; ++i)
      w[i] = (uint32_t(p[4 * i]) << 24) | (uint32_t(p[4 * i + 1]) << 16) |
             (uint32_t(p[4 * i + 2]) << 8) | uint32_t(p[4 * i + 3]);
    for (int i = 16; i < 80; ++i)
      w[i] = rol(w[i - 3] ^ w[i - 8] ^ w[i - 14] ^ w[i - 16], 1);
    uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4];
    for (int i = 0; i < 80; ++i) {
      uint32_t f, k;
      if (i < 20) {
        f = (b & c) | (~b & d);
        k = 0x5A827999u;
      } else if (i < 40) {
        f = b ^ c ^ d;
        k = 0x6ED9EBA1u;
      } else if (i < 60) {
        f = (b & c) | (b & d) | (c & d);
        k = 0x8F1BBCDCu;
      } else {
        f = b ^ c ^ d;
        k = 0xCA62C1D6u;
      }
      uint32_t tmp = rol(a, 5) + f + e + k + w[i];
      e = d;
      d = c;
      c = rol(b, 30);
      b = a;
      a = tmp;
    }
    h[0] += a;
    h[1] += b;
    h[2] += c;
    h[3] += d;
    h[4] += e;
  }

  std::string digest(const std::string& msg) {
    std::string data = msg;
    uint64_t bits = uint64_t(msg.size()) * 8;
    data += '\x80';
    while (data.size() % 64 != 56) data += '\0';
    for (int i = 7; i >= 0; --i)
      data += static_cast<char>((bits >> (8 * i)) & 0xFF);
    for (size_t off = 0; off < data.size(); off += 64)
      block(reinterpret_cast<const unsigned char*>(data.data()) + off);
    char out[41];
    for (int i = 0; i < 5; ++i) std::snprintf(out + 8 * i, 9, "%08x", h[i]);
    return std::string(out, 40);
  }
};

}  // namespace

std::string content_hash(const std::string& bytes) {
  std::string blob = "blob " + std::to_string(bytes.size());
  blob += '\0';
  blob += bytes;
  return Sha1{}.digest(blob);
}

nlohmann::ordered_json RunRecord::to_json() const {
  nlohmann::ordered_json out;
  out["config"] = config;
  nlohmann::ordered_json hashes = nlohmann::ordered_json::object();
  for (const auto& [path, hash] : input_hashes) hashes[path] = hash;
  out["input_hashes"] = std::move(hashes);
  out["results"] = results;
  nlohmann::ordered_json times = nlohmann::ordered_json::array();
  for (const auto& [stage, sec] : timings)
    times.push_back({{"stage", stage}, {"seconds", sec}});
  out["timings"] = std::move(times);
  return out;
}

}  // namespace gts
