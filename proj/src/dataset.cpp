#include "shapetask/dataset.hpp"

#include <sstream>

#include "shapetask/io_util.hpp"
#include "shapetask/shape_targets.hpp"

namespace shapetask {

namespace {

constexpr char kTensorMagic[] = "shapetask-tensor";
constexpr char kTensorVersion[] = "v1";
constexpr char kManifestMagic[] = "shapetask-manifest";
constexpr char kManifestVersion[] = "v1";

size_t dtype_width(const std::string& dtype) {
  if (dtype == "f64") return 8;
  if (dtype == "i32") return 4;
  if (dtype == "u8") return 1;
  throw ParseError("tensor file: unknown dtype '" + dtype + "'");
}

void write_tensor_raw(const std::filesystem::path& path, const char* dtype,
                      const std::vector<int>& shape, const std::string& payload) {
  std::ostringstream header;
  header << kTensorMagic << " " << kTensorVersion << "\n";
  header << "dtype " << dtype << "\n";
  header << "shape";
  for (int e : shape) header << " " << e;
  header << "\n";
  header << "checksum fnv1a64 " << io::fnv1a64_hex(payload) << "\n";
  header << "---\n";
  io::atomic_write_file(path, header.str() + payload);
}

struct RawTensor {
  std::string dtype;
  std::vector<int> shape;
  std::string payload;
};

RawTensor read_tensor_raw(const std::filesystem::path& path) {
  const std::string raw = io::read_file(path);
  const size_t header_end = raw.find("\n---\n");
  if (header_end == std::string::npos)
    throw ParseError("tensor file: missing header terminator in " + path.string());

  std::istringstream header(raw.substr(0, header_end));
  RawTensor out;
  out.payload = raw.substr(header_end + 5);

  std::string magic, version;
  header >> magic >> version;
  if (magic != kTensorMagic) throw ParseError("tensor file: bad magic in " + path.string());
  if (version != kTensorVersion)
    throw VersionMismatchError("tensor file: unsupported version '" + version + "' in " +
                               path.string());

  std::string key;
  if (!(header >> key >> out.dtype) || key != "dtype")
    throw ParseError("tensor file: expected dtype line in " + path.string());

  std::string shape_line;
  std::getline(header, shape_line);  // rest of dtype line
  std::getline(header, shape_line);
  std::istringstream shape_stream(shape_line);
  if (!(shape_stream >> key) || key != "shape")
    throw ParseError("tensor file: expected shape line in " + path.string());
  for (int e; shape_stream >> e;) {
    if (e < 0) throw ParseError("tensor file: negative extent in " + path.string());
    out.shape.push_back(e);
  }

  std::string algo, expected;
  if (!(header >> key >> algo >> expected) || key != "checksum" || algo != "fnv1a64")
    throw ParseError("tensor file: expected checksum line in " + path.string());

  std::int64_t numel = 1;
  for (int e : out.shape) numel *= e;
  const size_t expected_bytes = static_cast<size_t>(numel) * dtype_width(out.dtype);
  if (out.payload.size() < expected_bytes)
    throw TruncatedPayloadError("tensor file: payload truncated in " + path.string());
  if (out.payload.size() > expected_bytes)
    throw ParseError("tensor file: trailing bytes in " + path.string());
  if (io::fnv1a64_hex(out.payload) != expected)
    throw ChecksumError("tensor file: checksum mismatch in " + path.string());
  return out;
}

}  // namespace

void write_tensor_f64(const std::filesystem::path& path, const std::vector<int>& shape,
                      const std::vector<double>& values) {
  std::string payload;
  payload.reserve(values.size() * 8);
  for (double v : values) io::append_f64le(payload, v);
  write_tensor_raw(path, "f64", shape, payload);
}

void write_tensor_i32(const std::filesystem::path& path, const std::vector<int>& shape,
                      const std::vector<std::int32_t>& values) {
  std::string payload;
  payload.reserve(values.size() * 4);
  for (std::int32_t v : values) io::append_i32le(payload, v);
  write_tensor_raw(path, "i32", shape, payload);
}

void write_tensor_u8(const std::filesystem::path& path, const std::vector<int>& shape,
                     const std::vector<std::uint8_t>& values) {
  std::string payload(values.begin(), values.end());
  write_tensor_raw(path, "u8", shape, payload);
}

std::pair<std::vector<int>, std::vector<double>> read_tensor_f64(
    const std::filesystem::path& path) {
  RawTensor raw = read_tensor_raw(path);
  if (raw.dtype != "f64")
    throw ParseError("tensor file: expected dtype f64, got " + raw.dtype + " in " + path.string());
  std::vector<double> values(raw.payload.size() / 8);
  for (size_t i = 0; i < values.size(); ++i) values[i] = io::read_f64le(raw.payload, i * 8);
  return {std::move(raw.shape), std::move(values)};
}

std::pair<std::vector<int>, std::vector<std::int32_t>> read_tensor_i32(
    const std::filesystem::path& path) {
  RawTensor raw = read_tensor_raw(path);
  if (raw.dtype != "i32")
    throw ParseError("tensor file: expected dtype i32, got " + raw.dtype + " in " + path.string());
  std::vector<std::int32_t> values(raw.payload.size() / 4);
  for (size_t i = 0; i < values.size(); ++i) values[i] = io::read_i32le(raw.payload, i * 4);
  return {std::move(raw.shape), std::move(values)};
}

std::pair<std::vector<int>, std::vector<std::uint8_t>> read_tensor_u8(
    const std::filesystem::path& path) {
  RawTensor raw = read_tensor_raw(path);
  if (raw.dtype != "u8")
    throw ParseError("tensor file: expected dtype u8, got " + raw.dtype + " in " + path.string());
  std::vector<std::uint8_t> values(raw.payload.begin(), raw.payload.end());
  return {std::move(raw.shape), std::move(values)};
}

Sample make_sample(Tensor image, LabelMap labels) {
  Sample s;
  s.distance = composite_distance_map(labels);
  s.contour = contour_map(labels);
  s.image = std::move(image);
  s.labels = std::move(labels);
  return s;
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "samples");
  std::filesystem::create_directories(dir / "targets");

  std::ostringstream manifest;
  manifest << kManifestMagic << " " << kManifestVersion << "\n";
  manifest << "split " << dataset.split << "\n";
  manifest << "seed " << dataset.seed << "\n";
  manifest << "classes " << dataset.num_classes << "\n";
  manifest << "height " << dataset.height << "\n";
  manifest << "width " << dataset.width << "\n";
  manifest << "count " << dataset.samples.size() << "\n";

  for (size_t i = 0; i < dataset.samples.size(); ++i) {
    const Sample& s = dataset.samples[i];
    const std::string idx = std::to_string(i);
    const std::string img = "samples/" + idx + ".img";
    const std::string lbl = "samples/" + idx + ".lbl";
    const std::string dst = "targets/" + idx + ".dst";
    const std::string ctr = "targets/" + idx + ".ctr";

    write_tensor_f64(dir / img, s.image.shape(), s.image.values());
    std::vector<std::int32_t> labels(s.labels.labels.data().begin(), s.labels.labels.data().end());
    write_tensor_i32(dir / lbl, {s.labels.height(), s.labels.width()}, labels);
    write_tensor_f64(dir / dst, {s.distance.height(), s.distance.width()}, s.distance.data());
    write_tensor_u8(dir / ctr, {s.contour.height(), s.contour.width()}, s.contour.data());

    manifest << "sample " << i << " " << img << " " << lbl << " " << dst << " " << ctr << "\n";
  }
  io::atomic_write_file(dir / "manifest", manifest.str());
}

Dataset read_dataset(const std::filesystem::path& dir) {
  std::istringstream manifest(io::read_file(dir / "manifest"));

  std::string magic, version;
  manifest >> magic >> version;
  if (magic != kManifestMagic) throw ParseError("manifest: bad magic in " + dir.string());
  if (version != kManifestVersion)
    throw VersionMismatchError("manifest: unsupported version '" + version + "'");

  Dataset out;
  std::string key;
  size_t count = 0;
  if (!(manifest >> key >> out.split) || key != "split")
    throw ParseError("manifest: expected split line");
  if (!(manifest >> key >> out.seed) || key != "seed")
    throw ParseError("manifest: expected seed line");
  if (!(manifest >> key >> out.num_classes) || key != "classes")
    throw ParseError("manifest: expected classes line");
  if (!(manifest >> key >> out.height) || key != "height")
    throw ParseError("manifest: expected height line");
  if (!(manifest >> key >> out.width) || key != "width")
    throw ParseError("manifest: expected width line");
  if (!(manifest >> key >> count) || key != "count")
    throw ParseError("manifest: expected count line");

  for (size_t i = 0; i < count; ++i) {
    size_t idx = 0;
    std::string img, lbl, dst, ctr;
    if (!(manifest >> key >> idx >> img >> lbl >> dst >> ctr) || key != "sample" || idx != i)
      throw ParseError("manifest: sample listing does not match count in " + dir.string());

    Sample s;
    auto [img_shape, img_values] = read_tensor_f64(dir / img);
    s.image = Tensor(img_shape, std::move(img_values));
    if (s.image.rank() != 3 || s.image.extent(0) != 1 || s.image.extent(1) != out.height ||
        s.image.extent(2) != out.width)
      throw ParseError("dataset: image shape mismatch in " + img);

    auto [lbl_shape, lbl_values] = read_tensor_i32(dir / lbl);
    if (lbl_shape.size() != 2 || lbl_shape[0] != out.height || lbl_shape[1] != out.width)
      throw ParseError("dataset: label shape mismatch in " + lbl);
    s.labels = LabelMap(out.height, out.width, out.num_classes);
    std::copy(lbl_values.begin(), lbl_values.end(), s.labels.labels.data().begin());
    s.labels.validate();

    auto [dst_shape, dst_values] = read_tensor_f64(dir / dst);
    if (dst_shape.size() != 2 || dst_shape[0] != out.height || dst_shape[1] != out.width)
      throw ParseError("dataset: distance shape mismatch in " + dst);
    s.distance = DistanceMap(out.height, out.width);
    s.distance.data() = std::move(dst_values);

    auto [ctr_shape, ctr_values] = read_tensor_u8(dir / ctr);
    if (ctr_shape.size() != 2 || ctr_shape[0] != out.height || ctr_shape[1] != out.width)
      throw ParseError("dataset: contour shape mismatch in " + ctr);
    s.contour = ContourMap(out.height, out.width);
    s.contour.data() = std::move(ctr_values);

    out.samples.push_back(std::move(s));
  }

  std::string trailing;
  if (manifest >> trailing)
    throw ParseError("manifest: trailing entries beyond declared count in " + dir.string());
  return out;
}

}  // namespace shapetask
