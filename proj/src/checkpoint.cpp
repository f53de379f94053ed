#include "grfcnn/checkpoint.hpp"

#include <fstream>
#include <sstream>
#include <vector>

#include "grfcnn/binary_io.hpp"
#include "grfcnn/errors.hpp"

namespace grfcnn {

void WriteCheckpoint(const Network& net, std::ostream& os) {
  binary::Writer w(os);
  w.Bytes(kCheckpointMagic);
  w.U8(kCheckpointVersion);
  const ModelConfig& c = net.config();
  for (std::size_t f : c.conv_filters) w.U32(static_cast<std::uint32_t>(f));
  for (std::size_t v : {c.kernel, c.pool_size, c.pool_stride, c.dense_units, c.classes,
                        c.input_height, c.input_width, c.input_channels, c.scale_divisor}) {
    w.U32(static_cast<std::uint32_t>(v));
  }
  w.U64(net.seed());
  const auto params = net.Parameters();
  w.U32(static_cast<std::uint32_t>(params.size()));
  for (const ConstParamRef& p : params) {
    w.String(p.name);
    w.U32(static_cast<std::uint32_t>(p.value->rank()));
    for (std::size_t d : p.value->shape()) w.U32(static_cast<std::uint32_t>(d));
    w.F64Array(p.value->data());
  }
}

Network ReadCheckpoint(std::istream& is) {
  binary::Reader r(is);
  if (r.Bytes(kCheckpointMagic.size()) != kCheckpointMagic) {
    throw FormatError("not a checkpoint file (bad magic)");
  }
  const std::uint8_t version = r.U8();
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version) +
                      " (this build reads version " +
                      std::to_string(kCheckpointVersion) + ")");
  }
  ModelConfig c;
  for (std::size_t& f : c.conv_filters) f = r.U32();
  for (std::size_t* v : {&c.kernel, &c.pool_size, &c.pool_stride, &c.dense_units,
                         &c.classes, &c.input_height, &c.input_width,
                         &c.input_channels, &c.scale_divisor}) {
    *v = r.U32();
  }
  try {
    c.Validate();
  } catch (const UsageError& e) {
    throw FormatError(std::string("checkpoint holds an invalid model config: ") + e.what());
  }
  const std::uint64_t seed = r.U64();
  const std::uint32_t count = r.U32();
  if (count > 64) throw FormatError("implausible tensor count in checkpoint");
  std::vector<Tensor> params;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.String(256);
    const std::uint32_t rank = r.U32();
    if (rank == 0 || rank > 8) throw FormatError("bad rank for tensor " + name);
    Shape shape(rank);
    for (std::size_t& d : shape) d = r.U32();
    Tensor t;
    try {
      t = Tensor(shape);
    } catch (const ShapeError& e) {
      throw FormatError("bad shape for tensor " + name + ": " + e.what());
    }
    r.F64Array(t.data());
    params.push_back(std::move(t));
  }
  try {
    return Network(c, seed, std::move(params));
  } catch (const ShapeError& e) {
    throw FormatError(std::string("checkpoint tensors do not match its config: ") + e.what());
  }
}

void SaveCheckpoint(const Network& net, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  WriteCheckpoint(net, os);
  if (!os.flush()) throw IoError("failed writing " + path.string());
}

Network LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint " + path.string());
  return ReadCheckpoint(is);
}

}  // namespace grfcnn
