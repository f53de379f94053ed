#include "grfcnn/dataset_io.hpp"

#include <fstream>

#include "grfcnn/binary_io.hpp"

namespace grfcnn {

void WriteDataset(const LabeledDataset& dataset, std::ostream& os) {
  if (dataset.windows.empty()) throw UsageError("refusing to write an empty dataset");
  dataset.Validate();
  binary::Writer w(os);
  w.Bytes(kDatasetMagic);
  w.U8(kDatasetVersion);
  const Tensor& first = dataset.windows.front().matrix;
  w.U32(static_cast<std::uint32_t>(first.dim(0)));
  w.U32(static_cast<std::uint32_t>(first.dim(1)));
  w.String(dataset.provenance.source);
  w.String(dataset.provenance.digest);
  w.U64(dataset.windows.size());
  for (const GrfWindow& win : dataset.windows) {
    w.U8(static_cast<std::uint8_t>(ClassIndex(win.label)));
    w.U8(win.normalized ? 1 : 0);
    w.U32(static_cast<std::uint32_t>(win.window_index));
    w.String(win.subject_id);
    w.F64Array(win.matrix.data());
  }
}

LabeledDataset ReadDataset(std::istream& is) {
  binary::Reader r(is);
  if (r.Bytes(kDatasetMagic.size()) != kDatasetMagic) {
    throw FormatError("not a dataset file (bad magic)");
  }
  const std::uint8_t version = r.U8();
  if (version != kDatasetVersion) {
    throw FormatError("unsupported dataset version " + std::to_string(version));
  }
  const std::size_t rows = r.U32(), cols = r.U32();
  if (rows == 0 || cols == 0) throw FormatError("dataset window shape has a zero dimension");
  LabeledDataset ds;
  ds.provenance.source = r.String();
  ds.provenance.digest = r.String();
  const std::uint64_t count = r.U64();
  for (std::uint64_t i = 0; i < count; ++i) {
    GrfWindow w;
    w.label = ClassFromIndex(r.U8());
    w.normalized = r.U8() != 0;
    w.window_index = r.U32();
    w.subject_id = r.String(4096);
    w.matrix = Tensor({rows, cols});
    r.F64Array(w.matrix.data());
    ds.Add(std::move(w));
  }
  ds.Validate();
  return ds;
}

void SaveDataset(const LabeledDataset& dataset, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  WriteDataset(dataset, os);
  if (!os.flush()) throw IoError("failed writing " + path.string());
}

LabeledDataset LoadDataset(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open dataset " + path.string());
  return ReadDataset(is);
}

}  // namespace grfcnn
