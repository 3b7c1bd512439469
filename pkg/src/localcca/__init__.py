"""Hidden common variables of multi-view data via local CCA and diffusion maps."""
from .analysis import match_frequencies, spectrum, top_peaks
from .cca import attenuation_matrix, fit_cca, fit_cca_population
from .diffusion import (DiffusionEmbedding, diffusion_maps, embed,
                        gaussian_kernel, normalize_landmark,
                        normalize_row_stochastic)
from .metric import (KNearest, MetricMatrix, TimeWindow, metric_anchored,
                     metric_endpoint_averaged, metric_euclidean,
                     metric_mahalanobis, metric_midpoint, neighborhood)
from .tcca import (covariance_tensor, fit_tcca, mode_product, outer_product,
                   pipeline_k_sets, rank1_als, whiten_tensor)

__version__ = "0.1.0"
