"""Directory layout of the Results tree written by each subcommand."""

from pathlib import Path

RESULT_FOLDERS = {
    "reduce": ["Results/Reduce"],
    "fit": ["Results/Fit"],
    "simulate": ["Results/Simulate"],
    "compare": ["Results/Compare"],
    "diagnose": ["Results/Diagnose"],
}


def folder_setup(path, command):
    """
    Create the result folders for a subcommand under ``path``.

    Parameters
    ----------
    path : Path or str
        Output directory of the run.
    command : str
        One of reduce, fit, simulate, compare, diagnose.

    Returns
    -------
    Path
        The command's result folder.
    """
    path = Path(path)
    if command not in RESULT_FOLDERS:
        raise ValueError(
            f"Invalid command: {command}. Valid options are: {', '.join(RESULT_FOLDERS)}."
        )
    for folder in RESULT_FOLDERS[command]:
        (path / folder).mkdir(parents=True, exist_ok=True)
    return path / RESULT_FOLDERS[command][0]
