#include "amfc/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "amfc/error.hpp"
#include "amfc/fp_solver.hpp"
#include "amfc/hierarchy.hpp"

namespace amfc {

static_assert(std::endian::native == std::endian::little, "tensor dumps assume a little-endian host");

std::size_t TensorHeader::payload_size() const {
  std::size_t n = nt + 1u;
  for (std::uint32_t k = 0; k < K; ++k) n *= nx + 2u;
  return n;
}

namespace {

std::filesystem::path temp_name(const std::filesystem::path& path) {
  auto tmp = path;
  tmp += ".tmp";
  return tmp;
}

void commit(const std::filesystem::path& tmp, const std::filesystem::path& path) {
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw std::runtime_error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

}  // namespace

void write_tensor(const std::filesystem::path& path, const TensorHeader& h, std::span<const double> values) {
  if (values.size() != h.payload_size()) throw DomainError("write_tensor: payload size does not match header");
  const auto tmp = temp_name(path);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string());
    out.write("AMFC", 4);
    for (std::uint32_t v : {h.version, h.N, h.K, h.nx, h.nt}) out.write(reinterpret_cast<const char*>(&v), 4);
    out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  commit(tmp, path);
}

Tensor read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "AMFC", 4) != 0) throw std::runtime_error("not a tensor dump: " + path.string());
  Tensor t;
  for (std::uint32_t* v : {&t.header.version, &t.header.N, &t.header.K, &t.header.nx, &t.header.nt})
    in.read(reinterpret_cast<char*>(v), 4);
  if (!in || t.header.version != TensorHeader::kVersion) throw std::runtime_error("bad tensor header: " + path.string());
  t.values.resize(t.header.payload_size());
  in.read(reinterpret_cast<char*>(t.values.data()), static_cast<std::streamsize>(t.values.size() * sizeof(double)));
  if (!in) throw std::runtime_error("truncated tensor payload: " + path.string());
  return t;
}

std::vector<std::filesystem::path> dump_hierarchy(const HierarchySolution& sol, const std::filesystem::path& dir,
                                                  const std::string& stem) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> files;
  for (int K = 0; K <= sol.N(); ++K) {
    TensorHeader h;
    h.N = static_cast<std::uint32_t>(sol.N());
    h.K = static_cast<std::uint32_t>(K);
    h.nx = static_cast<std::uint32_t>(sol.space().nx());
    h.nt = static_cast<std::uint32_t>(sol.layers() - 1);
    std::vector<double> data;
    data.reserve(h.payload_size());
    for (int j = 0; j < sol.layers(); ++j) {
      const auto layer = sol.layer(K, j);
      data.insert(data.end(), layer.begin(), layer.end());
    }
    files.push_back(dir / (stem + "_K" + std::to_string(K) + ".amfc"));
    write_tensor(files.back(), h, data);
  }
  return files;
}

void dump_rows(const std::vector<std::vector<double>>& rows, int nx, const std::filesystem::path& file) {
  TensorHeader h;
  h.N = 1;
  h.K = 1;
  h.nx = static_cast<std::uint32_t>(nx);
  h.nt = static_cast<std::uint32_t>(rows.size() - 1);
  std::vector<double> data;
  data.reserve(h.payload_size());
  for (const auto& r : rows) data.insert(data.end(), r.begin(), r.end());
  write_tensor(file, h, data);
}

void dump_path(const FPPath& path, const std::filesystem::path& file) {
  std::vector<std::vector<double>> rows;
  for (const auto& d : path.densities) rows.emplace_back(d.values().begin(), d.values().end());
  dump_rows(rows, path.at(0).grid().nx(), file);
}

void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
  const auto tmp = temp_name(path);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  commit(tmp, path);
}

}  // namespace amfc
