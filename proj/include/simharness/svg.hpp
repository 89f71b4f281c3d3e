// SPDX-License-Identifier: Apache-2.0
#ifndef SIMHARNESS_SVG_HPP
#define SIMHARNESS_SVG_HPP

#include <cstdio>
#include <string>

namespace simharness::svg {

/// Deterministic coordinate formatting shared by the SVG emitters and
/// their data sidecars (12 significant digits, no locale dependence).
inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

/// Straight-line mapping from data space to pixel space.
struct LinearMap {
  double d0 = 0, d1 = 1, p0 = 0, p1 = 1;
  double at(double v) const { return p0 + (v - d0) / (d1 - d0) * (p1 - p0); }
};

/// Minimal SVG 1.1 writer. Styling goes through CSS classes so golden
/// files stay independent of palette tweaks.
class Builder {
 public:
  Builder(int width, int height) : width_(width), height_(height) {
    body_ += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
             std::to_string(width) + "\" height=\"" + std::to_string(height) +
             "\" viewBox=\"0 0 " + std::to_string(width) + " " +
             std::to_string(height) + "\">\n";
  }

  void style(const std::string& css) {
    body_ += "<style>\n" + css + "</style>\n";
  }

  void line(double x1, double y1, double x2, double y2, const std::string& cls) {
    body_ += "<line class=\"" + cls + "\" x1=\"" + num(x1) + "\" y1=\"" + num(y1) +
             "\" x2=\"" + num(x2) + "\" y2=\"" + num(y2) + "\"/>\n";
  }

  void rect(double x, double y, double w, double h, const std::string& cls) {
    body_ += "<rect class=\"" + cls + "\" x=\"" + num(x) + "\" y=\"" + num(y) +
             "\" width=\"" + num(w) + "\" height=\"" + num(h) + "\"/>\n";
  }

  void circle(double cx, double cy, double r, const std::string& cls) {
    body_ += "<circle class=\"" + cls + "\" cx=\"" + num(cx) + "\" cy=\"" + num(cy) +
             "\" r=\"" + num(r) + "\"/>\n";
  }

  void text(double x, double y, const std::string& content, const std::string& cls,
            const std::string& anchor = "middle") {
    body_ += "<text class=\"" + cls + "\" x=\"" + num(x) + "\" y=\"" + num(y) +
             "\" text-anchor=\"" + anchor + "\">" + escape(content) + "</text>\n";
  }

  std::string finish() {
    return body_ + "</svg>\n";
  }

  static std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
      if (c == '&') out += "&amp;";
      else if (c == '<') out += "&lt;";
      else if (c == '>') out += "&gt;";
      else out.push_back(c);
    }
    return out;
  }

 private:
  int width_, height_;
  std::string body_;
};

/// Default stylesheet: semantic classes only.
inline const char* default_css() {
  return ".cover{stroke:#3b6fb6;stroke-width:1}\n"
         ".noncover{stroke:#7b3294;stroke-width:1}\n"
         ".mcse{stroke:#d8a800;stroke-width:1.5}\n"
         ".reference{stroke:#444444;stroke-width:1;stroke-dasharray:4 3}\n"
         ".zero{stroke:#444444;stroke-width:1;stroke-dasharray:4 3}\n"
         ".equality{stroke:#444444;stroke-width:1;stroke-dasharray:4 3}\n"
         ".stem{stroke:#3b6fb6;stroke-width:1.5}\n"
         ".point{fill:#3b6fb6;stroke:none}\n"
         ".mean{stroke:#d8a800;stroke-width:2.5}\n"
         ".step{stroke-width:1.5;fill:none}\n"
         ".step0{stroke:#3b6fb6}\n.step1{stroke:#c23b22}\n.step2{stroke:#2d8659}\n"
         ".step3{stroke:#7b3294}\n.step4{stroke:#d8a800}\n.step5{stroke:#555555}\n"
         ".factorband{stroke:#666666;stroke-width:1;fill:none}\n"
         ".axis{stroke:#222222;stroke-width:1}\n"
         ".gridline{stroke:#dddddd;stroke-width:0.5}\n"
         ".paren{fill:#3b6fb6;font:11px monospace}\n"
         ".label{fill:#222222;font:11px sans-serif}\n"
         ".title{fill:#222222;font:13px sans-serif}\n"
         ".annotation{fill:#888888;font:11px sans-serif}\n";
}

}  // namespace simharness::svg

#endif
