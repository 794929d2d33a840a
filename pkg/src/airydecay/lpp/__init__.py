from .field import PassageField, GeodesicPath, sample_field, passage_point, passage_line, geodesic_line, rescale_star, star_offset
from .montecarlo import (
    KINDS,
    McSummary,
    mc_cov_star,
    mc_variance_star,
    mc_exceedance,
    mc_cross_check,
    mc_passage_mean,
    mc_line_mean,
    sample_star,
    one_point_ks,
    jackknife_stderr,
    wilson_interval,
)
