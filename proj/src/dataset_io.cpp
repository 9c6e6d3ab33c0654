#include "occface/dataset_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <regex>
#include <sstream>

#include <json.hpp>

namespace occface {

using nlohmann::json;

void write_file_atomic(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// point clouds

PointCloudd parse_point_cloud(const std::string& text) {
  std::vector<double> coords;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    double v[3];
    std::string extra;
    if (!(fields >> v[0] >> v[1] >> v[2]) || (fields >> extra)) {
      throw ParseError("expected 'x y z'", lineno);
    }
    if (!std::isfinite(v[0]) || !std::isfinite(v[1]) || !std::isfinite(v[2])) {
      throw ParseError("non-finite coordinate", lineno);
    }
    coords.insert(coords.end(), v, v + 3);
  }
  if (coords.empty()) throw EmptyInputError("point cloud file contains no points");
  const auto n = static_cast<Eigen::Index>(coords.size() / 3);
  return PointCloudd(Eigen::Map<const Eigen::Matrix3Xd>(coords.data(), 3, n));
}

PointCloudd load_point_cloud(const fs::path& path) { return parse_point_cloud(read_file(path)); }

std::string format_point_cloud(const PointCloudd& cloud) {
  std::string out;
  out.reserve(static_cast<std::size_t>(cloud.size()) * 64);
  char buf[128];
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    const auto p = cloud.point(i);
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", p.x(), p.y(), p.z());
    out += buf;
  }
  return out;
}

void save_point_cloud(const fs::path& path, const PointCloudd& cloud) {
  write_file_atomic(path, format_point_cloud(cloud));
}

// ---------------------------------------------------------------------------
// 16-bit PGM

DepthQuantization DepthQuantization::FitTo(const RangeImage& img) {
  DepthQuantization q;
  if (img.valid_count() == 0) return q;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (Eigen::Index i = 0; i < img.pixel_count(); ++i) {
    if (!img.validity().data()[i]) continue;
    lo = std::min(lo, img.depths().data()[i]);
    hi = std::max(hi, img.depths().data()[i]);
  }
  q.offset = lo;
  q.scale = hi > lo ? (hi - lo) / kMaxDepthCode : 1.0;
  return q;
}

std::uint16_t DepthQuantization::encode(double depth) const {
  const double code = std::round((depth - offset) / scale);
  return static_cast<std::uint16_t>(std::clamp(code, 0.0, static_cast<double>(kMaxDepthCode)));
}

std::string encode_pgm16(const Gray16& img) {
  std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n65535\n";
  out.reserve(out.size() + img.pixels.size() * 2);
  for (std::uint16_t v : img.pixels) {
    out.push_back(static_cast<char>(v >> 8));
    out.push_back(static_cast<char>(v & 0xff));
  }
  return out;
}

Gray16 decode_pgm16(const std::string& bytes) {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&]() -> long {
    skip_space();
    const std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (start == pos) throw ParseError("malformed PGM header", 0);
    return std::stol(bytes.substr(start, pos - start));
  };
  if (bytes.size() < 2 || bytes.compare(0, 2, "P5") != 0) throw ParseError("not a binary PGM (magic P5)", 0);
  pos = 2;
  Gray16 img;
  img.width = static_cast<int>(read_int());
  img.height = static_cast<int>(read_int());
  const long maxval = read_int();
  if (img.width < 1 || img.height < 1) throw ParseError("PGM dimensions must be positive", 0);
  if (maxval != 65535) throw ParseError("PGM maxval must be 65535", 0);
  ++pos;  // single whitespace before raster
  const auto n = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height);
  if (bytes.size() < pos + 2 * n) throw ParseError("PGM raster truncated", 0);
  img.pixels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto hi = static_cast<unsigned char>(bytes[pos + 2 * i]);
    const auto lo = static_cast<unsigned char>(bytes[pos + 2 * i + 1]);
    img.pixels[i] = static_cast<std::uint16_t>((hi << 8) | lo);
  }
  return img;
}

fs::path sidecar_path(const fs::path& pgm_path) {
  fs::path p = pgm_path;
  p += ".json";
  return p;
}

void save_range_image(const fs::path& path, const RangeImage& img, std::optional<DepthQuantization> quant) {
  const DepthQuantization q = quant.value_or(DepthQuantization::FitTo(img));
  if (!(q.scale > 0.0) || !std::isfinite(q.offset)) throw ValidationError("depth quantization needs scale > 0");
  Gray16 gray{img.width(), img.height(), {}};
  gray.pixels.resize(static_cast<std::size_t>(img.pixel_count()));
  for (Eigen::Index i = 0; i < img.pixel_count(); ++i) {
    gray.pixels[static_cast<std::size_t>(i)] =
        img.validity().data()[i] ? q.encode(img.depths().data()[i]) : kInvalidDepthCode;
  }
  json side = {{"version", 1},
               {"width", img.width()},
               {"height", img.height()},
               {"offset", q.offset},
               {"scale", q.scale},
               {"invalid_code", kInvalidDepthCode},
               {"all_invalid", img.valid_count() == 0}};
  write_file_atomic(path, encode_pgm16(gray));
  write_file_atomic(sidecar_path(path), side.dump(2) + "\n");
}

RangeImage load_range_image(const fs::path& path) {
  const Gray16 gray = decode_pgm16(read_file(path));
  json side;
  try {
    side = json::parse(read_file(sidecar_path(path)));
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad range image sidecar: ") + e.what(), 0);
  }
  if (side.value("version", 0) != 1) throw ParseError("unsupported sidecar version", 0);
  if (side.at("width").get<int>() != gray.width || side.at("height").get<int>() != gray.height) {
    throw ValidationError("range image sidecar dimensions do not match the PGM");
  }
  const DepthQuantization q{side.at("offset").get<double>(), side.at("scale").get<double>()};
  const auto invalid = side.value("invalid_code", static_cast<int>(kInvalidDepthCode));
  DepthGrid depth(gray.height, gray.width);
  FlagGrid valid(gray.height, gray.width);
  for (Eigen::Index i = 0; i < depth.size(); ++i) {
    const std::uint16_t code = gray.pixels[static_cast<std::size_t>(i)];
    valid.data()[i] = code != invalid;
    depth.data()[i] = valid.data()[i] ? q.decode(code) : 0.0;
  }
  return RangeImage(std::move(depth), std::move(valid));
}

void save_mask(const fs::path& path, const OcclusionMask& mask) {
  Gray16 gray{mask.width(), mask.height(), {}};
  gray.pixels.resize(static_cast<std::size_t>(mask.bits().size()));
  for (Eigen::Index i = 0; i < mask.bits().size(); ++i) {
    gray.pixels[static_cast<std::size_t>(i)] = mask.bits().data()[i] ? 65535 : 0;
  }
  write_file_atomic(path, encode_pgm16(gray));
}

OcclusionMask load_mask(const fs::path& path) {
  const Gray16 gray = decode_pgm16(read_file(path));
  BitGrid bits(gray.height, gray.width);
  for (Eigen::Index i = 0; i < bits.size(); ++i) bits.data()[i] = gray.pixels[static_cast<std::size_t>(i)] ? 1 : 0;
  return OcclusionMask(std::move(bits));
}

void save_normal_map_ppm(const fs::path& path, const NormalMap& normals) {
  std::string out = "P6\n" + std::to_string(normals.width()) + " " + std::to_string(normals.height()) + "\n255\n";
  auto byte = [](double n) { return static_cast<char>(static_cast<unsigned char>(std::lround((n + 1.0) * 127.5))); };
  for (int r = 0; r < normals.height(); ++r) {
    for (int c = 0; c < normals.width(); ++c) {
      out.push_back(byte(normals.nx(r, c)));
      out.push_back(byte(normals.ny(r, c)));
      out.push_back(byte(normals.nz(r, c)));
    }
  }
  write_file_atomic(path, out);
}

void save_vector_text(const fs::path& path, const Eigen::VectorXd& v) {
  std::string out;
  char buf[64];
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g\n", v(i));
    out += buf;
  }
  write_file_atomic(path, out);
}

Eigen::VectorXd load_vector_text(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::vector<double> vals;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream field(line);
    double v = 0.0;
    std::string extra;
    if (!(field >> v) || (field >> extra)) throw ParseError("expected one number per line", lineno);
    vals.push_back(v);
  }
  return Eigen::Map<const Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

// ---------------------------------------------------------------------------
// PCA basis

namespace {

constexpr char kBasisMagic[8] = {'O', 'F', 'P', 'C', 'A', 'B', 'A', 'S'};

template <typename T>
void put_le(std::string& out, T value) {
  unsigned char raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
  out.append(reinterpret_cast<const char*>(raw), sizeof(T));
}

template <typename T>
T get_le(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw ParseError("basis file truncated", 0);
  unsigned char raw[sizeof(T)];
  std::memcpy(raw, in.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
  pos += sizeof(T);
  T value;
  std::memcpy(&value, raw, sizeof(T));
  return value;
}

}  // namespace

std::string encode_basis(const PcaBasis& basis) {
  basis.validate();
  std::string out(kBasisMagic, sizeof kBasisMagic);
  put_le<std::uint32_t>(out, kBasisFormatVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(basis.width));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(basis.height));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(basis.components()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(basis.training_samples));
  for (Eigen::Index i = 0; i < basis.mean.size(); ++i) put_le(out, basis.mean(i));
  for (Eigen::Index i = 0; i < basis.eigenvalues.size(); ++i) put_le(out, basis.eigenvalues(i));
  for (Eigen::Index k = 0; k < basis.eigenvectors.cols(); ++k)
    for (Eigen::Index i = 0; i < basis.eigenvectors.rows(); ++i) put_le(out, basis.eigenvectors(i, k));
  return out;
}

PcaBasis decode_basis(const std::string& bytes) {
  if (bytes.size() < sizeof kBasisMagic || std::memcmp(bytes.data(), kBasisMagic, sizeof kBasisMagic) != 0) {
    throw ParseError("not a PCA basis file", 0);
  }
  std::size_t pos = sizeof kBasisMagic;
  if (get_le<std::uint32_t>(bytes, pos) != kBasisFormatVersion) throw ParseError("unsupported basis version", 0);
  PcaBasis b;
  b.width = static_cast<int>(get_le<std::uint32_t>(bytes, pos));
  b.height = static_cast<int>(get_le<std::uint32_t>(bytes, pos));
  const auto m = static_cast<Eigen::Index>(get_le<std::uint32_t>(bytes, pos));
  b.training_samples = static_cast<int>(get_le<std::uint32_t>(bytes, pos));
  const Eigen::Index p = static_cast<Eigen::Index>(b.width) * b.height;
  if (bytes.size() != pos + sizeof(double) * static_cast<std::size_t>(p + m + m * p)) {
    throw ParseError("basis file size does not match its header", 0);
  }
  b.mean.resize(p);
  b.eigenvalues.resize(m);
  b.eigenvectors.resize(p, m);
  for (Eigen::Index i = 0; i < p; ++i) b.mean(i) = get_le<double>(bytes, pos);
  for (Eigen::Index i = 0; i < m; ++i) b.eigenvalues(i) = get_le<double>(bytes, pos);
  for (Eigen::Index k = 0; k < m; ++k)
    for (Eigen::Index i = 0; i < p; ++i) b.eigenvectors(i, k) = get_le<double>(bytes, pos);
  b.validate();
  return b;
}

void save_basis(const fs::path& path, const PcaBasis& basis) { write_file_atomic(path, encode_basis(basis)); }
PcaBasis load_basis(const fs::path& path) { return decode_basis(read_file(path)); }

// ---------------------------------------------------------------------------
// scan names

namespace {

std::string kind_code(OcclusionKind kind) {
  switch (kind) {
    case OcclusionKind::kEye: return "O_EYE";
    case OcclusionKind::kMouth: return "O_MOUTH";
    case OcclusionKind::kGlasses: return "O_GLASSES";
    case OcclusionKind::kHair: return "O_HAIR";
    case OcclusionKind::kNone: return "N_N";
  }
  return "N_N";
}

}  // namespace

std::string format_scan_name(const ScanName& name) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "bs%03d_%s_%d", name.subject_id, kind_code(name.kind).c_str(), name.index);
  return buf;
}

ScanName parse_scan_name(const std::string& file_name) {
  static const std::regex pattern(R"(bs(\d+)_(N_N|O_EYE|O_MOUTH|O_GLASSES|O_HAIR)_(\d+)(\.[A-Za-z0-9]+)?)");
  const std::string base = fs::path(file_name).filename().string();
  std::smatch m;
  if (!std::regex_match(base, m, pattern)) throw ValidationError("scan name does not follow bs<id>_<kind>_<n>: " + base);
  ScanName out;
  out.subject_id = std::stoi(m[1].str());
  out.index = std::stoi(m[3].str());
  for (auto kind : kAllOcclusionKinds) {
    if (kind_code(kind) == m[2].str()) out.kind = kind;
  }
  return out;
}

std::vector<NamedScan> list_scans(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<NamedScan> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension().string();
    if (ext != ".xyz" && ext != ".txt") continue;
    try {
      out.push_back({parse_scan_name(entry.path().filename().string()), entry.path()});
    } catch (const ValidationError&) {
      // not a scan
    }
  }
  std::sort(out.begin(), out.end(), [](const NamedScan& a, const NamedScan& b) {
    return std::tie(a.name.subject_id, a.name.kind, a.name.index) <
           std::tie(b.name.subject_id, b.name.kind, b.name.index);
  });
  return out;
}

}  // namespace occface
