#include "ipdp/image_io.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <cmath>
#include <cstring>
#include <limits>
#include <vector>

#include "ipdp/error.hpp"

namespace ipdp {

namespace {

Gray8 from_mat(const cv::Mat& m) {
  Gray8 out(m.rows, m.cols);
  for (int r = 0; r < m.rows; ++r)
    std::memcpy(out.pixels.data() + static_cast<size_t>(r) * m.cols, m.ptr<uint8_t>(r), m.cols);
  return out;
}

cv::Mat to_mat(const Gray8& img) {
  cv::Mat m(img.height, img.width, CV_8UC1);
  for (int r = 0; r < img.height; ++r)
    std::memcpy(m.ptr<uint8_t>(r), img.pixels.data() + static_cast<size_t>(r) * img.width,
                img.width);
  return m;
}

}  // namespace

Gray8 load_green_channel(const std::string& path) {
  cv::Mat m = cv::imread(path, cv::IMREAD_UNCHANGED);
  if (m.empty()) throw IoError("cannot decode image: " + path);
  if (m.depth() != CV_8U) throw IoError("only 8-bit images are supported: " + path);
  if (m.channels() == 1) return from_mat(m);
  std::vector<cv::Mat> planes;
  cv::split(m, planes);
  // OpenCV decodes color as BGR(A); index 1 is green.
  return from_mat(planes[1]);
}

void save_png(const Gray8& img, const std::string& path) {
  if (!cv::imwrite(path, to_mat(img), {cv::IMWRITE_PNG_COMPRESSION, 6}))
    throw IoError("cannot write PNG: " + path);
}

Gray8 load_png_gray(const std::string& path) {
  cv::Mat m = cv::imread(path, cv::IMREAD_GRAYSCALE);
  if (m.empty()) throw IoError("cannot decode PNG: " + path);
  return from_mat(m);
}

Gray8 jpeg_roundtrip(const Gray8& img, int quality) {
  require(quality >= 1 && quality <= 100, "jpeg quality must be in [1,100]");
  std::vector<uint8_t> buf;
  if (!cv::imencode(".jpg", to_mat(img), buf, {cv::IMWRITE_JPEG_QUALITY, quality}))
    throw IoError("jpeg encode failed");
  cv::Mat dec = cv::imdecode(buf, cv::IMREAD_GRAYSCALE);
  if (dec.empty()) throw IoError("jpeg decode failed");
  return from_mat(dec);
}

double psnr(const Gray8& a, const Gray8& b) {
  require(a.height == b.height && a.width == b.width, "psnr: size mismatch");
  double mse = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a.pixels[i]) - static_cast<double>(b.pixels[i]);
    mse += d * d;
  }
  mse /= static_cast<double>(a.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

}  // namespace ipdp
