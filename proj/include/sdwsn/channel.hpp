#pragma once

#include "sdwsn/rng.hpp"

namespace sdwsn {

// Log-normal shadowing link model. Path attenuation at distance x is
// 10*alpha*log10(x) + N(0, sigma^2) dB; a packet is received when the sampled
// attenuation stays strictly below beta_th. r0 is the distance at which the
// point-to-point delivery rate drops to 50%.
//
// Invariant kept by the factories: beta_th_db == 10*alpha*log10(r0_m), so the
// closed-form delivery probability (driven by r0) and the per-packet sampler
// (driven by beta_th) always describe the same channel, whether r0 is derived
// from the threshold or configured directly.
struct ChannelParams {
    double alpha = 3.0;        // path loss exponent
    double sigma_db = 4.0;     // shadowing standard deviation, dB
    double beta_th_db = 66.0;  // attenuation threshold, dB
    double p_t_dbm = 0.0;      // transmit power, dBm
    double r0_m = 0.0;         // effective communication radius, m

    // r0 derived from the threshold: r0 = 10^(beta_th / (10*alpha)).
    static ChannelParams from_threshold(double alpha, double sigma_db,
                                        double beta_th_db, double p_t_dbm = 0.0);
    // Threshold derived from a configured radius: beta_th = 10*alpha*log10(r0).
    static ChannelParams with_radius(double alpha, double sigma_db, double r0_m,
                                     double p_t_dbm = 0.0);

    // RSSI recorded for a period in which nothing was heard (receiver
    // sensitivity floor).
    double rssi_floor_dbm() const { return p_t_dbm - beta_th_db; }

    void validate() const;  // throws std::invalid_argument on bad fields
};

// One period's outcome on a link; both fields come from the same shadowing
// draw, so rssi_dbm > p_t - beta_th exactly when received.
struct LinkDraw {
    bool received = false;
    double rssi_dbm = 0.0;
};

// r0 = 10^(beta_th / (10*alpha)). Rejects alpha <= 0.
double effective_radius(double alpha, double beta_th_db);

// p(x) = 1/2 - 1/2 erf(10*alpha/(sqrt(2)*sigma) * log10(x/r0)).
// p(0) = 1 by the limit; negative x rejected.
double delivery_probability(double x_m, const ChannelParams& params);

// Mean path attenuation 10*alpha*log10(x), dB.
double mean_attenuation_db(double x_m, const ChannelParams& params);

// Completes a link draw from a sampled attenuation value.
LinkDraw link_draw_from_attenuation(double attenuation_db,
                                    const ChannelParams& params);

// Samples one packet transmission at distance x > 0.
LinkDraw sample_link_event(double x_m, const ChannelParams& params, Rng& rng);

}  // namespace sdwsn
