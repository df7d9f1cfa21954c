#pragma once

#include "nvdyn/dynamics.hpp"

#include <string>
#include <vector>

namespace nvdyn {

/// Integration window inside a readout pulse, offsets in ns from its onset.
struct IntegrationWindow {
  double start = 0.0;
  double length = 0.0;

  void validate() const;
  double end() const { return start + length; }
};

/// Trapezoidal integral of the signal over the window. The window edges must
/// lie inside the trace; edges between samples are linearly interpolated.
double windowed_counts(const TimeTrace& trace, const IntegrationWindow& window);
double windowed_counts(const std::vector<double>& times, const std::vector<double>& signal,
                       const IntegrationWindow& window);

double contrast(double s0, double s1);         ///< 1 - s1/s0
double optical_contrast(double s0, double s1); ///< (s0 - s1)/(s0 + s1)
double snr(double s0, double s1);              ///< (s0 - s1)/sqrt(s0 + s1)

/// Signals from an initialized state and from its pi-rotated copy during a
/// readout pulse, sampled every dt from the pulse onset.
struct ReadoutSignals {
  double dt = 1.0;
  std::vector<double> s0;
  std::vector<double> s1;
};

ReadoutSignals readout_signals(const PopulationState& initialized, const ModelParameters& params,
                               double p_readout, double duration, double dt = 1.0);

struct ReadoutOptimum {
  IntegrationWindow window;     // best-SNR window
  double counts0 = 0.0;         // windowed S0
  double counts1 = 0.0;         // windowed S1
  double snr = 0.0;
  double contrast = 0.0;        // C over the best-SNR window
  double max_contrast = 0.0;    // peak instantaneous 1 - s1(t)/s0(t)
  double max_contrast_time = 0.0;
};

/// Grid search over window lengths with the start fixed at `window_start`.
/// Ties go to the shorter window. Traces must share their time grid.
ReadoutOptimum optimize_readout_window(const TimeTrace& trace0, const TimeTrace& trace1,
                                       double window_start = 0.0);
ReadoutOptimum optimize_readout_window(const ReadoutSignals& signals);

/// Contrast formula for comparing literature parameter sets:
/// 1 - (l0 R43 + l1 R21 + 0.6 l5) / (l1 R43 + l0 R21 + 0.6 l5). The 0.6
/// weight is taken from params.beta.
double population_contrast(const ModelParameters& params, double l0, double l1, double l5);

// Background --------------------------------------------------------------

/// Saturating exponential b_inf + (b_zero - b_inf) exp(-p_h / p_c), counts/s.
struct BackgroundModel {
  double b_zero = 3900.0;
  double b_inf = 2700.0;
  double p_c = 2.0; // mW

  void validate() const;
};

double background_rate(const BackgroundModel& model, double p_h);

struct BackgroundCorrection {
  double counts = 0.0;     // corrected, >= 0
  double background = 0.0; // counts removed
  bool clamped = false;    // raw counts were below the background estimate
};

/// Removes background_rate * window length (ns converted to s).
BackgroundCorrection subtract_background(double counts, const IntegrationWindow& window,
                                         const BackgroundModel& model, double p_h);

// Laser correlation -------------------------------------------------------

struct CorrelationResult {
  double slope = 0.0;
  double pearson_r = 0.0;
  bool degenerate = false; // y had zero variance; r reported as 0
};

/// Least-squares slope of y on x plus Pearson r. Needs n >= 3 and varying x.
CorrelationResult correlation_diagnostic(const std::vector<double>& x, const std::vector<double>& y);

// Measured traces -----------------------------------------------------------

/// Photon counts per time bin, `t_ns, counts` CSV. Bin i covers
/// [t_i, t_i + bin_width).
struct MeasuredTrace {
  std::vector<double> times;
  std::vector<double> counts;

  double bin_width() const;
  void validate() const;
};

MeasuredTrace parse_measured_trace(const std::string& text, const std::string& source = "<string>");
MeasuredTrace load_measured_trace(const std::string& path);

/// Sum of the bins whose start lies in [start, start + length).
double binned_counts(const MeasuredTrace& trace, const IntegrationWindow& window);

struct WindowAnalysis {
  IntegrationWindow window;
  BackgroundCorrection s0;
  BackgroundCorrection s1;
  double contrast = 0.0;
  double optical_contrast = 0.0;
  double snr = 0.0;
};

struct AnalysisReport {
  std::vector<WindowAnalysis> windows;
  WindowAnalysis best_snr;
  double p_h = 0.0;
  BackgroundModel background;
  bool background_applied = false;
};

/// Contrast extraction from a measured pair (without / with pi-pulse). Every
/// requested window is itemized; the best-SNR window is searched over bin
/// boundaries starting at the first bin.
AnalysisReport analyze_measured(const MeasuredTrace& trace0, const MeasuredTrace& trace1,
                                const std::vector<IntegrationWindow>& windows,
                                const BackgroundModel* background, double p_h);

std::string format_analysis_report(const AnalysisReport& report);

} // namespace nvdyn
