import argparse
import logging
import sys

from spdflow.core.utils.exceptions import ConfigError, SpdflowError
from spdflow.flow import reset_logger, run_spdflow

EXIT_RUNTIME = 1
EXIT_CONFIG = 2


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML file with run settings")
    common.add_argument("--output", help="output directory (default: current directory)")
    common.add_argument("--geometry", choices=["euclidean", "affine"])
    common.add_argument("--p", type=int, help="reduced matrix dimension")
    common.add_argument("--window", dest="window_seconds", type=float, help="window length in seconds")
    common.add_argument("--sampling-rate", dest="sampling_rate", type=float)
    common.add_argument("--reduction", choices=["variance_max", "greedy_min_eig"])
    common.add_argument("--plan", help="reuse a saved reduction plan")
    common.add_argument("--lag", type=int)
    common.add_argument("--lag-max", dest="lag_max", type=int)
    common.add_argument("--model", choices=["scalar", "diagonal"])
    common.add_argument("--restrict", choices=["full", "no-alpha", "no-beta"])
    common.add_argument(
        "--attractor-policy",
        dest="attractor_policy",
        choices=["interictal_mean", "own_mean", "file"],
    )
    common.add_argument("--attractor", help="attractor matrix file (policy 'file')")
    common.add_argument("--interictal", help="interictal series (policy 'interictal_mean')")
    common.add_argument("--signals", nargs="+")
    common.add_argument("--series", nargs="+")
    common.add_argument("--params", help="parameter or fit file to simulate from")
    common.add_argument("--n-steps", dest="n_steps", type=int)
    common.add_argument("--groups", nargs="+", help="group label per fit")
    common.add_argument("--seed", type=int)

    parser = argparse.ArgumentParser(
        prog="spdflow",
        description="Manifold time-series models for covariance matrices.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    subparsers.add_parser("reduce", parents=[common], help="signals to reduced covariance series")
    subparsers.add_parser("fit", parents=[common], help="fit the scalar or diagonal model")
    subparsers.add_parser("simulate", parents=[common], help="simulate from model parameters")
    compare = subparsers.add_parser("compare", parents=[common], help="Mahalanobis comparison of fits")
    compare.add_argument("fits", nargs="*", help="fit files")
    subparsers.add_parser("diagnose", parents=[common], help="descriptive series diagnostics")
    return parser


def cli_spdflow(argv=None):
    args = vars(build_parser().parse_args(argv))
    command = args.pop("command")
    yaml_path = args.pop("config")
    if not args.get("fits"):
        args.pop("fits", None)

    logger = logging.getLogger("spdflow_logger")
    try:
        run_spdflow(command, yaml_path, args)
    except ConfigError as e:
        logger.error(str(e))
        return EXIT_CONFIG
    except (SpdflowError, OSError, ValueError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_RUNTIME
    finally:
        reset_logger()
    return 0


if __name__ == "__main__":
    sys.exit(cli_spdflow())
