#include "sdwsn/channel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace sdwsn {

ChannelParams ChannelParams::from_threshold(double alpha, double sigma_db,
                                            double beta_th_db, double p_t_dbm) {
    ChannelParams p;
    p.alpha = alpha;
    p.sigma_db = sigma_db;
    p.beta_th_db = beta_th_db;
    p.p_t_dbm = p_t_dbm;
    p.r0_m = effective_radius(alpha, beta_th_db);
    p.validate();
    return p;
}

ChannelParams ChannelParams::with_radius(double alpha, double sigma_db,
                                         double r0_m, double p_t_dbm) {
    if (!(r0_m > 0.0))
        throw std::invalid_argument("channel: r0_m must be positive");
    ChannelParams p;
    p.alpha = alpha;
    p.sigma_db = sigma_db;
    p.beta_th_db = 10.0 * alpha * std::log10(r0_m);
    p.p_t_dbm = p_t_dbm;
    p.r0_m = r0_m;
    p.validate();
    return p;
}

void ChannelParams::validate() const {
    if (!(alpha > 0.0)) throw std::invalid_argument("channel: alpha must be > 0");
    if (!(sigma_db > 0.0))
        throw std::invalid_argument("channel: sigma_db must be > 0");
    if (!(beta_th_db > 0.0))
        throw std::invalid_argument("channel: beta_th_db must be > 0");
    if (!(r0_m > 0.0)) throw std::invalid_argument("channel: r0_m must be > 0");
}

double effective_radius(double alpha, double beta_th_db) {
    if (!(alpha > 0.0))
        throw std::invalid_argument("effective_radius: alpha must be > 0");
    if (!(beta_th_db > 0.0))
        throw std::invalid_argument("effective_radius: beta_th_db must be > 0");
    return std::pow(10.0, beta_th_db / (10.0 * alpha));
}

double delivery_probability(double x_m, const ChannelParams& params) {
    if (x_m < 0.0)
        throw std::invalid_argument("delivery_probability: negative distance");
    if (x_m == 0.0) return 1.0;
    const double arg = 10.0 * params.alpha / (std::sqrt(2.0) * params.sigma_db) *
                       std::log10(x_m / params.r0_m);
    return 0.5 - 0.5 * std::erf(arg);
}

double mean_attenuation_db(double x_m, const ChannelParams& params) {
    return 10.0 * params.alpha * std::log10(x_m);
}

LinkDraw link_draw_from_attenuation(double attenuation_db,
                                    const ChannelParams& params) {
    LinkDraw d;
    d.received = attenuation_db < params.beta_th_db;
    d.rssi_dbm = params.p_t_dbm - attenuation_db;
    return d;
}

LinkDraw sample_link_event(double x_m, const ChannelParams& params, Rng& rng) {
    if (!(x_m > 0.0))
        throw std::invalid_argument("sample_link_event: distance must be > 0");
    const double attenuation =
        mean_attenuation_db(x_m, params) + rng.normal(0.0, params.sigma_db);
    return link_draw_from_attenuation(attenuation, params);
}

}  // namespace sdwsn
