#include "dataeval/dataset_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "dataeval/netpbm.hpp"
#include "numcore/errors.hpp"

namespace gwsm {

namespace fs = std::filesystem;

std::string sample_stem(const ImageSample& sample) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06lld", static_cast<long long>(sample.id));
  return buf;
}

std::string stem_of(const std::string& filename) { return fs::path(filename).stem().string(); }

std::vector<std::uint8_t> image_to_rgb8(const Tensor& image) {
  const std::size_t h = image.dim(1), w = image.dim(2), plane = h * w;
  std::vector<std::uint8_t> rgb(3 * plane);
  for (std::size_t p = 0; p < plane; ++p)
    for (std::size_t c = 0; c < 3; ++c)
      rgb[p * 3 + c] = static_cast<std::uint8_t>(std::lround(std::clamp(image[c * plane + p], 0.0, 1.0) * 255.0));
  return rgb;
}

void save_dataset(const std::string& dir, const Dataset& dataset) {
  std::error_code ec;
  fs::create_directories(fs::path(dir) / "images", ec);
  fs::create_directories(fs::path(dir) / "masks", ec);
  if (ec) throw DataError("cannot create dataset directory " + dir + ": " + ec.message());
  std::ofstream manifest(fs::path(dir) / "manifest.tsv", std::ios::binary);
  if (!manifest) throw DataError("cannot write manifest in " + dir);
  for (const auto& s : dataset) {
    const std::string stem = sample_stem(s);
    const std::string image_rel = "images/" + stem + ".ppm";
    write_ppm((fs::path(dir) / image_rel).string(), s.width, s.height, image_to_rgb8(s.image));
    if (!s.gt_mask.empty()) write_pgm((fs::path(dir) / "masks" / (stem + ".pgm")).string(), s.width, s.height, s.gt_mask);
    manifest << s.id << '\t' << image_rel << '\t';
    bool first = true;
    for (std::size_t c = 0; c < s.label.size(); ++c) {
      if (!s.label[c]) continue;
      if (!first) manifest << ',';
      manifest << (c + 1);
      first = false;
    }
    manifest << '\n';
  }
  if (!manifest) throw DataError("write failed for manifest in " + dir);
}

Dataset load_dataset(const std::string& dir, std::size_t num_classes) {
  const fs::path root(dir);
  std::ifstream manifest(root / "manifest.tsv", std::ios::binary);
  if (!manifest) throw DataError("no manifest.tsv in " + dir);
  Dataset out;
  std::set<std::int64_t> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(manifest, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fail = [&](const std::string& why) {
      throw DataError("manifest line " + std::to_string(line_no) + ": " + why);
    };
    const auto tab1 = line.find('\t');
    const auto tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
    if (tab2 == std::string::npos) fail("expected id<TAB>filename<TAB>class-ids");
    ImageSample s;
    const std::string id_text = line.substr(0, tab1);
    const auto [ptr, ec] = std::from_chars(id_text.data(), id_text.data() + id_text.size(), s.id);
    if (ec != std::errc() || ptr != id_text.data() + id_text.size()) fail("bad id '" + id_text + "'");
    if (!seen.insert(s.id).second) fail("duplicate id " + id_text);
    const std::string filename = line.substr(tab1 + 1, tab2 - tab1 - 1);
    if (filename.empty()) fail("empty filename");
    s.label.assign(num_classes, 0);
    std::string classes = line.substr(tab2 + 1);
    std::size_t start = 0;
    while (start <= classes.size()) {
      const auto comma = classes.find(',', start);
      const std::string token = classes.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      std::size_t cls = 0;
      const auto r = std::from_chars(token.data(), token.data() + token.size(), cls);
      if (token.empty() || r.ec != std::errc() || r.ptr != token.data() + token.size() || cls < 1 || cls > num_classes) {
        fail("bad class id '" + token + "'");
      }
      s.label[cls - 1] = 1;
      if (comma == std::string::npos) break;
      start = comma + 1;
    }

    Image8 img;
    try {
      img = read_netpbm((root / filename).string());
    } catch (const DataError& e) {
      fail(e.what());
    }
    if (img.channels != 3) fail("image is not RGB: " + filename);
    if (img.width % 4 != 0 || img.height % 4 != 0) fail("image size not divisible by 4: " + filename);
    s.width = img.width;
    s.height = img.height;
    const std::size_t plane = img.width * img.height;
    std::vector<double> data(3 * plane);
    for (std::size_t p = 0; p < plane; ++p)
      for (std::size_t c = 0; c < 3; ++c) data[c * plane + p] = img.pixels[p * 3 + c] / 255.0;
    s.image = Tensor({3, img.height, img.width}, std::move(data));

    const fs::path mask_path = root / "masks" / (stem_of(filename) + ".pgm");
    if (fs::exists(mask_path)) {
      const Image8 mask = read_netpbm(mask_path.string());
      if (mask.channels != 1 || mask.width != img.width || mask.height != img.height) {
        fail("mask does not match image: " + mask_path.string());
      }
      s.gt_mask = mask.pixels;
    }
    out.push_back(std::move(s));
  }
  if (out.empty()) throw DataError("manifest in " + dir + " lists no images");
  return out;
}

}  // namespace gwsm
