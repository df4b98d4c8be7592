"""Small argument sets covering every CSV-producing subcommand."""

SMALL_RUNS = {
    "fringes": ["--alpha2", "1e4", "--lambda", "2", "--points", "9", "--shots", "50", "--seed", "3"],
    "ratio": ["--alpha2", "1e4", "--lambda", "2", "--points", "11"],
    "qfi-bounds": ["--n-min", "10", "--n-max", "1000", "--points", "4"],
    "config-opt": ["--family", "active-active", "--n-min", "10", "--n-max", "100", "--points", "2", "--starts", "0"],
    "illumination": ["--pixels", "500", "--trials", "100", "--n-b", "1", "10", "--seed", "2"],
    "holometer-ratio": ["--family", "twb", "--vary", "phi0", "--grid-min", "1e-4", "--grid-max", "1e-1",
                        "--points", "5", "--log"],
    "nrf": ["--mu", "10", "--lam", "1", "--points", "6"],
}


def run_twice(main, tmp_path, command, extra=()):
    """Run ``command`` twice into separate stems; return both CSV byte strings."""
    out = []
    for k in range(2):
        stem = tmp_path / f"{command}-{k}"
        code = main([command, *SMALL_RUNS[command], *extra, "--out", str(stem)])
        assert code == 0, f"{command} exited with {code}"
        out.append(stem.with_name(stem.name + ".csv").read_bytes())
    return out
