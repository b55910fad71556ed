"""Exemplar synthesis for black-box classifiers.

Searches a generator's latent space with an elitist evolutionary strategy
with momentum until the classifier assigns the target class with high
confidence.  Ships a glass-box gradient-ascent baseline, toy deterministic
generators and classifiers, a subprocess plugin protocol for attaching real
external models as true black boxes, and a benchmark harness for
convergence studies.
"""

from .bench import BenchStats, SweepRow, SweepSpec, TrialRecord, run_sweep, run_trials, write_report
from .configio import RunSpec, load_run_spec
from .core import (
    EsConfig,
    GdConfig,
    RunResult,
    Specimen,
    clamp_latent,
    rng_streams,
    validate_config,
)
from .errors import (
    BenchError,
    CapabilityError,
    ConfigError,
    DimensionError,
    ExemplarError,
    ModelFormatError,
    PluginError,
    ProtocolError,
)
from .es import (
    EsState,
    check_convergence,
    es_step,
    evaluate_unscored,
    init_population,
    mutate_specimen,
    run_es,
    select_elite,
)
from .fixtures import Fixture, PluginFixture, get_fixture, list_fixtures
from .gd import DifferentiableComposite, composite_gradient, finite_diff_gradient, run_gd
from .generators import (
    AffineDecoder,
    GeneratorContract,
    IdentityDecoder,
    MlpDecoder,
    affine_decode,
    identity_decode,
    load_mlp_decoder,
    mlp_decode,
    save_mlp_decoder,
)
from .kernels import BACKEND as KERNEL_BACKEND
from .oracles import (
    CentroidSoftmaxModel,
    OracleContract,
    ToyMlpModel,
    centroid_softmax_predict,
    load_mlp,
    save_mlp,
    toy_mlp_predict,
)
from .plugin import PluginClient, SubprocessGenerator, SubprocessOracle, serve_generator, serve_oracle

__version__ = "0.1.0"
