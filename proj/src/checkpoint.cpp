#include "dualnav/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace dualnav::nn {

namespace {

constexpr char kMagic[8] = {'D', 'U', 'A', 'L', 'N', 'A', 'V', '\0'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

template <class T>
void write_pod(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw std::runtime_error("checkpoint truncated");
  return v;
}

void write_tensors(std::ostream& out, const NetworkParams& p) {
  p.for_each([&](std::string_view, const Tensor& t) {
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(double)));
  });
}

void read_tensors(std::istream& in, NetworkParams& p) {
  p.for_each([&](std::string_view, Tensor& t) {
    in.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    if (!in) throw std::runtime_error("checkpoint truncated");
  });
}

// A parameter set with the right tensor shapes and zero data.
NetworkParams skeleton(const NetworkShape& shape) { return init_params(shape, 0).zeros_like(); }

}  // namespace

nlohmann::json shape_to_json(const NetworkShape& s) {
  return {{"image_side", s.image_side}, {"filters", s.filters}, {"kernels", s.kernels},
          {"dense_units", s.dense_units}, {"dropout", s.dropout}, {"recurrent", s.recurrent}};
}

NetworkShape shape_from_json(const nlohmann::json& j) {
  NetworkShape s;
  s.image_side = j.at("image_side").get<int>();
  s.filters = j.at("filters").get<std::array<int, 3>>();
  s.kernels = j.at("kernels").get<std::array<int, 3>>();
  s.dense_units = j.at("dense_units").get<int>();
  s.dropout = j.at("dropout").get<double>();
  s.recurrent = j.at("recurrent").get<bool>();
  s.validate();
  return s;
}

void save_checkpoint(const std::filesystem::path& path, const NetworkParams& params, const AdamState* adam,
                     const nlohmann::json& meta) {
  nlohmann::json header;
  header["format"] = "dualnav-qnet";
  header["version"] = kCheckpointVersion;
  header["architecture"] = params.shape.recurrent ? "recurrent" : "feedforward";
  header["shape"] = shape_to_json(params.shape);
  auto tensors = nlohmann::json::array();
  params.for_each([&](std::string_view name, const Tensor& t) {
    tensors.push_back({{"name", name}, {"shape", t.shape}});
  });
  header["tensors"] = std::move(tensors);
  if (adam) {
    header["adam"] = {{"learning_rate", adam->config.learning_rate}, {"beta1", adam->config.beta1},
                      {"beta2", adam->config.beta2}, {"epsilon", adam->config.epsilon},
                      {"step", adam->step}};
  } else {
    header["adam"] = nullptr;
  }
  header["meta"] = meta;
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof kMagic);
  write_pod<std::uint32_t>(out, kCheckpointVersion);
  write_pod<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  write_tensors(out, params);
  if (adam) {
    write_tensors(out, adam->m);
    write_tensors(out, adam->v);
  }
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  char magic[sizeof kMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw std::runtime_error(path.string() + " is not a dualnav checkpoint");
  }
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kCheckpointVersion) throw std::runtime_error("unsupported checkpoint version");
  const auto len = read_pod<std::uint64_t>(in);
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw std::runtime_error("checkpoint truncated");
  const auto header = nlohmann::json::parse(text);

  Checkpoint ck;
  ck.params = skeleton(shape_from_json(header.at("shape")));
  std::size_t k = 0;
  const auto& listed = header.at("tensors");
  ck.params.for_each([&](std::string_view name, const Tensor& t) {
    if (k >= listed.size() || listed[k].at("name").get<std::string>() != name ||
        listed[k].at("shape").get<std::vector<int>>() != t.shape) {
      throw std::runtime_error("checkpoint tensor table does not match its shape");
    }
    ++k;
  });
  read_tensors(in, ck.params);
  if (!header.at("adam").is_null()) {
    const auto& a = header["adam"];
    AdamConfig cfg{a.at("learning_rate").get<double>(), a.at("beta1").get<double>(),
                   a.at("beta2").get<double>(), a.at("epsilon").get<double>()};
    AdamState st = AdamState::for_params(ck.params, cfg);
    st.step = a.at("step").get<std::int64_t>();
    read_tensors(in, st.m);
    read_tensors(in, st.v);
    ck.adam = std::move(st);
  }
  ck.meta = header.value("meta", nlohmann::json::object());
  return ck;
}

}  // namespace dualnav::nn
