#include "ipdp/plot.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace ipdp {

std::vector<CurvePoint> load_curve_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open curve csv: " + path);
  std::vector<CurvePoint> out;
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty curve csv: " + path);
  if (line.rfind("iteration,", 0) != 0) throw IoError("unexpected curve csv header: " + line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    CurvePoint p;
    try {
      std::getline(ss, cell, ',');
      p.iteration = std::stoll(cell);
      std::getline(ss, cell, ',');
      p.train_loss = std::stod(cell);
      std::getline(ss, cell, ',');
      p.train_acc = std::stod(cell);
      std::getline(ss, cell, ',');
      p.val_loss = std::stod(cell);
      std::getline(ss, cell, ',');
      p.val_acc = std::stod(cell);
    } catch (const std::exception&) {
      throw IoError("malformed curve csv row: " + line);
    }
    out.push_back(p);
  }
  return out;
}

namespace {

struct Panel {
  cv::Rect area;
  double x_min, x_max, y_min, y_max;

  cv::Point map(double x, double y) const {
    const double fx = (x - x_min) / std::max(1e-12, x_max - x_min);
    const double fy = (y - y_min) / std::max(1e-12, y_max - y_min);
    return {area.x + static_cast<int>(fx * (area.width - 1)),
            area.y + area.height - 1 - static_cast<int>(fy * (area.height - 1))};
  }
};

void polyline(cv::Mat& img, const Panel& p, const std::vector<CurvePoint>& curve,
              double CurvePoint::*field, const cv::Scalar& color) {
  for (size_t i = 1; i < curve.size(); ++i) {
    cv::line(img, p.map(static_cast<double>(curve[i - 1].iteration), curve[i - 1].*field),
             p.map(static_cast<double>(curve[i].iteration), curve[i].*field), color, 1,
             cv::LINE_AA);
  }
  if (curve.size() == 1)
    cv::circle(img, p.map(static_cast<double>(curve[0].iteration), curve[0].*field), 2, color,
               cv::FILLED);
}

void frame(cv::Mat& img, const Panel& p, const std::string& title) {
  cv::rectangle(img, p.area, {80, 80, 80});
  cv::putText(img, title, {p.area.x, p.area.y - 8}, cv::FONT_HERSHEY_SIMPLEX, 0.45, {30, 30, 30},
              1, cv::LINE_AA);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", p.y_max);
  cv::putText(img, buf, {p.area.x + 2, p.area.y + 12}, cv::FONT_HERSHEY_SIMPLEX, 0.35,
              {90, 90, 90}, 1, cv::LINE_AA);
  std::snprintf(buf, sizeof(buf), "%.3g", p.y_min);
  cv::putText(img, buf, {p.area.x + 2, p.area.y + p.area.height - 4}, cv::FONT_HERSHEY_SIMPLEX,
              0.35, {90, 90, 90}, 1, cv::LINE_AA);
  std::snprintf(buf, sizeof(buf), "iter %.0f..%.0f", p.x_min, p.x_max);
  cv::putText(img, buf, {p.area.x, p.area.y + p.area.height + 16}, cv::FONT_HERSHEY_SIMPLEX,
              0.35, {90, 90, 90}, 1, cv::LINE_AA);
}

}  // namespace

void render_curve_plot(const std::vector<CurvePoint>& curve, const std::string& out_path) {
  require(!curve.empty(), "cannot plot an empty curve");
  const int W = 980, H = 420;
  cv::Mat img(H, W, CV_8UC3, cv::Scalar(255, 255, 255));

  const double x_min = static_cast<double>(curve.front().iteration);
  const double x_max = static_cast<double>(curve.back().iteration);
  double loss_max = 0;
  for (const auto& p : curve) loss_max = std::max({loss_max, p.train_loss, p.val_loss});

  Panel loss{{60, 40, 400, 300}, x_min, x_max, 0.0, std::max(loss_max * 1.05, 1e-6)};
  Panel acc{{540, 40, 400, 300}, x_min, x_max, 0.0, 1.0};

  frame(img, loss, "loss (train blue, val red)");
  frame(img, acc, "accuracy (train blue, val red)");

  const cv::Scalar train_color(200, 90, 30), val_color(50, 60, 220);
  polyline(img, loss, curve, &CurvePoint::train_loss, train_color);
  polyline(img, loss, curve, &CurvePoint::val_loss, val_color);
  polyline(img, acc, curve, &CurvePoint::train_acc, train_color);
  polyline(img, acc, curve, &CurvePoint::val_acc, val_color);

  if (!cv::imwrite(out_path, img)) throw IoError("cannot write plot: " + out_path);
}

}  // namespace ipdp
