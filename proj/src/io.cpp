#include "polyrom/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace polyrom {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <class T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    std::reverse(b, b + sizeof(T));
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

template <class T>
void put(std::ostream& os, T v) {
  v = to_little(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("truncated binary matrix");
  return to_little(v);
}

std::ofstream open_out(const fs::path& p, std::ios::openmode mode = std::ios::out) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream os(p, mode);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

std::ifstream open_in(const fs::path& p, std::ios::openmode mode = std::ios::in) {
  std::ifstream is(p, mode);
  if (!is) throw std::runtime_error("cannot read " + p.string());
  return is;
}

json read_json(const fs::path& p) {
  auto is = open_in(p);
  return json::parse(is);
}

void write_json(const fs::path& p, const json& j) {
  auto os = open_out(p);
  os << std::setw(2) << j << '\n';
}

std::vector<double> to_list(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector from_list(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

void write_matrix(const fs::path& path, const Matrix& m) {
  auto os = open_out(path, std::ios::binary);
  put<std::uint64_t>(os, static_cast<std::uint64_t>(m.rows()));
  put<std::uint64_t>(os, static_cast<std::uint64_t>(m.cols()));
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(m.data()),
             static_cast<std::streamsize>(m.size() * sizeof(double)));
  } else {
    for (Index k = 0; k < m.size(); ++k) put<double>(os, m.data()[k]);
  }
  if (!os) throw std::runtime_error("write failed for " + path.string());
}

Matrix read_matrix(const fs::path& path) {
  auto is = open_in(path, std::ios::binary);
  const auto rows = get<std::uint64_t>(is);
  const auto cols = get<std::uint64_t>(is);
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  if constexpr (std::endian::native == std::endian::little) {
    is.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!is) throw std::runtime_error("truncated binary matrix " + path.string());
  } else {
    for (Index k = 0; k < m.size(); ++k) m.data()[k] = get<double>(is);
  }
  return m;
}

void write_trajectory(const fs::path& stem, const Trajectory& t) {
  write_matrix(fs::path(stem.string() + ".bin"), t.states);
  json meta = {{"model", t.model}, {"mu", t.mu.values()},   {"dt", t.dt},
               {"scheme", t.scheme}, {"steps", t.steps()}, {"iterations", t.iterations}};
  write_json(fs::path(stem.string() + ".json"), meta);
}

Trajectory read_trajectory(const fs::path& stem) {
  Trajectory t;
  t.states = read_matrix(fs::path(stem.string() + ".bin"));
  const json meta = read_json(fs::path(stem.string() + ".json"));
  t.model = meta.at("model").get<std::string>();
  t.mu = ParamVector(meta.at("mu").get<std::vector<double>>());
  t.dt = meta.at("dt").get<double>();
  t.scheme = meta.at("scheme").get<std::string>();
  t.iterations = meta.at("iterations").get<std::vector<int>>();
  return t;
}

void write_reduced_trajectory(const fs::path& stem, const Matrix& reduced, const std::string& method,
                              const std::string& basis_ref, const ParamVector& mu) {
  write_matrix(fs::path(stem.string() + ".bin"), reduced);
  write_json(fs::path(stem.string() + ".json"),
             {{"method", method}, {"basis", basis_ref}, {"mu", mu.values()}});
}

void write_basis(const fs::path& dir, const ReducedBasis& basis) {
  fs::create_directories(dir);
  write_matrix(dir / "phi.bin", basis.phi);
  json meta = {{"n", basis.n},
               {"eps_pod", basis.eps_pod},
               {"singular_values", to_list(basis.singular_values)},
               {"block_modes", basis.block_modes}};
  json blocks = json::array();
  for (const auto& s : basis.block_singular_values) blocks.push_back(to_list(s));
  meta["block_singular_values"] = blocks;
  if (basis.layout) {
    meta["layout"] = {{"block_sizes", basis.layout->block_sizes},
                      {"variable_names", basis.layout->variable_names}};
  }
  write_json(dir / "basis.json", meta);
}

ReducedBasis read_basis(const fs::path& dir) {
  ReducedBasis b;
  b.phi = read_matrix(dir / "phi.bin");
  const json meta = read_json(dir / "basis.json");
  b.n = meta.at("n").get<Index>();
  b.eps_pod = meta.at("eps_pod").get<double>();
  b.singular_values = from_list(meta.at("singular_values").get<std::vector<double>>());
  b.block_modes = meta.at("block_modes").get<std::vector<Index>>();
  for (const auto& s : meta.at("block_singular_values"))
    b.block_singular_values.push_back(from_list(s.get<std::vector<double>>()));
  if (meta.contains("layout")) {
    LiftedSystemLayout l;
    l.block_sizes = meta["layout"].at("block_sizes").get<std::vector<Index>>();
    l.variable_names = meta["layout"].at("variable_names").get<std::vector<std::string>>();
    b.layout = l;
  }
  return b;
}

std::string affine_tag(const AffineScalar& s) {
  if (!s.index()) return "const:" + format_double(s.scale());
  if (s.scale() == 1.0) return "comp:" + std::to_string(*s.index());
  return "scaled:" + format_double(s.scale()) + ":" + std::to_string(*s.index());
}

AffineScalar affine_from_tag(const std::string& tag) {
  const auto c1 = tag.find(':');
  if (c1 == std::string::npos) throw std::invalid_argument("bad affine tag '" + tag + "'");
  const std::string kind = tag.substr(0, c1);
  const std::string rest = tag.substr(c1 + 1);
  if (kind == "const") return AffineScalar::constant(std::stod(rest));
  if (kind == "comp") return AffineScalar::component(std::stoul(rest));
  if (kind == "scaled") {
    const auto c2 = rest.find(':');
    if (c2 == std::string::npos) throw std::invalid_argument("bad affine tag '" + tag + "'");
    return AffineScalar::scaled_component(std::stod(rest.substr(0, c2)), std::stoul(rest.substr(c2 + 1)));
  }
  throw std::invalid_argument("bad affine tag '" + tag + "'");
}

namespace {

template <class T>
void write_terms(const fs::path& dir, json& manifest, const std::string& name,
                 const std::vector<ReducedTerm<T>>& terms) {
  for (std::size_t t = 0; t < terms.size(); ++t) {
    const std::string file = name + "_" + std::to_string(t) + ".bin";
    Matrix m = terms[t].tensor;
    write_matrix(dir / file, m);
    manifest["tensors"].push_back({{"name", name},
                                   {"term", t},
                                   {"file", file},
                                   {"rows", m.rows()},
                                   {"cols", m.cols()},
                                   {"theta", affine_tag(terms[t].theta)}});
  }
}

template <class T>
std::vector<ReducedTerm<T>> read_terms(const fs::path& dir, const json& manifest, const std::string& name) {
  std::vector<ReducedTerm<T>> out;
  for (const auto& e : manifest.at("tensors")) {
    if (e.at("name") != name) continue;
    Matrix m = read_matrix(dir / e.at("file").get<std::string>());
    if constexpr (std::is_same_v<T, Vector>) {
      out.push_back({affine_from_tag(e.at("theta")), Vector(m.col(0))});
    } else {
      out.push_back({affine_from_tag(e.at("theta")), std::move(m)});
    }
  }
  return out;
}

}  // namespace

void write_hrf_galerkin(const fs::path& dir, const HrfGalerkinOperators& ops) {
  fs::create_directories(dir);
  json manifest = {{"kind", "hrf-galerkin"}, {"n", ops.n}, {"n_inputs", ops.n_inputs},
                   {"tensors", json::array()}};
  write_matrix(dir / "PtP.bin", ops.PtP);
  manifest["tensors"].push_back({{"name", "PtP"}, {"term", 0}, {"file", "PtP.bin"},
                                 {"rows", ops.PtP.rows()}, {"cols", ops.PtP.cols()},
                                 {"theta", affine_tag(AffineScalar::constant(1.0))}});
  write_terms(dir, manifest, "PtC", ops.PtC);
  write_terms(dir, manifest, "PtAP", ops.PtAP);
  write_terms(dir, manifest, "PtF", ops.PtF);
  write_terms(dir, manifest, "PtB", ops.PtB);
  write_terms(dir, manifest, "PtN", ops.PtN);
  write_terms(dir, manifest, "PtW", ops.PtW);
  write_json(dir / "manifest.json", manifest);
}

HrfGalerkinOperators read_hrf_galerkin(const fs::path& dir) {
  const json manifest = read_json(dir / "manifest.json");
  if (manifest.at("kind") != "hrf-galerkin") throw std::runtime_error("not a Galerkin operator set");
  HrfGalerkinOperators ops;
  ops.n = manifest.at("n").get<Index>();
  ops.n_inputs = manifest.at("n_inputs").get<Index>();
  ops.PtP = read_matrix(dir / "PtP.bin");
  ops.PtC = read_terms<Vector>(dir, manifest, "PtC");
  ops.PtAP = read_terms<Matrix>(dir, manifest, "PtAP");
  ops.PtF = read_terms<Matrix>(dir, manifest, "PtF");
  ops.PtB = read_terms<Matrix>(dir, manifest, "PtB");
  ops.PtN = read_terms<Matrix>(dir, manifest, "PtN");
  ops.PtW = read_terms<Matrix>(dir, manifest, "PtW");
  return ops;
}

namespace {

const char* kind_name(DictKind k) {
  switch (k) {
    case DictKind::P: return "P";
    case DictKind::C: return "C";
    case DictKind::A: return "A";
    case DictKind::F: return "F";
    case DictKind::B: return "B";
    case DictKind::N: return "N";
    case DictKind::W: return "W";
  }
  return "?";
}

DictKind kind_from_name(const std::string& s) {
  for (DictKind k : {DictKind::P, DictKind::C, DictKind::A, DictKind::F, DictKind::B, DictKind::N,
                     DictKind::W})
    if (s == kind_name(k)) return k;
  throw std::invalid_argument("unknown dictionary kind '" + s + "'");
}

}  // namespace

void write_hrf_lspg(const fs::path& dir, const HrfLspgOperators& ops) {
  fs::create_directories(dir);
  json manifest = {{"kind", "hrf-lspg"}, {"n", ops.n}, {"n_inputs", ops.n_inputs}};
  json groups = json::array();
  for (const auto& g : ops.groups) {
    groups.push_back({{"kind", kind_name(g.kind)}, {"theta", affine_tag(g.theta)},
                      {"offset", g.offset}, {"size", g.size}});
  }
  manifest["groups"] = groups;
  manifest["tensors"] = json::array(
      {{{"name", "K"}, {"file", "K.bin"}, {"rows", ops.K.rows()}, {"cols", ops.K.cols()}}});
  write_matrix(dir / "K.bin", ops.K);
  write_json(dir / "manifest.json", manifest);
}

HrfLspgOperators read_hrf_lspg(const fs::path& dir) {
  const json manifest = read_json(dir / "manifest.json");
  if (manifest.at("kind") != "hrf-lspg") throw std::runtime_error("not an LSPG operator set");
  HrfLspgOperators ops;
  ops.n = manifest.at("n").get<Index>();
  ops.n_inputs = manifest.at("n_inputs").get<Index>();
  for (const auto& g : manifest.at("groups")) {
    ops.groups.push_back({kind_from_name(g.at("kind")), affine_from_tag(g.at("theta")),
                          g.at("offset").get<Index>(), g.at("size").get<Index>()});
  }
  ops.K = read_matrix(dir / "K.bin");
  return ops;
}

void write_weights_file(const fs::path& path, const EcswWeights& w) {
  auto os = open_out(path);
  write_weights(os, w);
}

EcswWeights read_weights_file(const fs::path& path) {
  auto is = open_in(path);
  return read_weights(is);
}

}  // namespace polyrom
