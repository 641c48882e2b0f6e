"""."""

import logging
from pathlib import Path

import plotly.graph_objects as go  # type: ignore
import plotly.io as pio  # type: ignore
from plotly.offline import plot  # type: ignore

from iso_lab.constants import PLOT_HTML, PLOT_JSON, PLOT_TSV
from iso_lab.testbed import CONSTANT_COLUMNS, EstimateReport


color_pallete = [
    'rgba(0, 149, 168, 0.8)',
    'rgba(17, 46, 81,0.8)',
    'rgba(255, 112, 67, 0.8)',
    'rgba(128, 64, 211, 0.8)',
    'rgba(161, 132, 151, 0.8)',
    'rgba(187, 66, 21, 0.8)',
    'rgba(174, 154, 15, 0.8)',
    'rgba(15, 121, 174, 0.8)',
]

dash_styles = {'c_eq2': 'solid', 'c_eq4': 'dash', 'c_eq6': 'dot', 'c_eq9': 'dashdot'}


def constants_figure(report: EstimateReport) -> go.Figure:
    """Median empirical constant against epsilon, one line per (ensemble, constant).

    Args:
        report (EstimateReport): Output of ``estimate_constants``.

    Returns:
        go.Figure: Log-scale figure of the per-epsilon medians.
    """
    data = report.plot_data()
    graphs = []
    for i_ens, (ensemble, series) in enumerate(data.groupby('ensemble', sort=True)):
        for name in CONSTANT_COLUMNS:
            values = series[['epsilon', name]].dropna()
            if values.empty:
                continue
            graphs.append(
                go.Scatter(
                    x=values['epsilon'].tolist(),
                    y=values[name].tolist(),
                    mode='lines+markers',
                    line=dict(shape='linear', color=color_pallete[i_ens % len(color_pallete)],
                              dash=dash_styles[name], width=3),
                    name=f'{ensemble} {name}',
                )
            )

    layout = go.Layout(
        title='',
        width=1000,
        height=700,
        xaxis=dict(
            mirror=True,
            ticks='outside',
            tickfont=dict(family='Helvetica, san-serif', size=18, color='black'),
            title=dict(text='epsilon', font=dict(size=24, family='Helvetica, san-serif')),
        ),
        yaxis=dict(
            type='log',
            mirror=True,
            ticks='outside',
            tickfont=dict(family='Helvetica, san-serif', size=18, color='black'),
            title=dict(text='median empirical constant', font=dict(size=24, family='Helvetica, san-serif')),
        ),
        legend=dict(font=dict(family="Courier", size=14, color="black")),
        plot_bgcolor='rgba(249,254,254, 0.99)',
        paper_bgcolor='rgba(249,253,253, 0.99)',
    )
    return go.Figure(data=graphs, layout=layout)


def plot_constants_go(report: EstimateReport, output_dir: str = '.') -> None:
    """Writes the plot data (TSV) and the constants figure as plotly JSON and a standalone HTML page."""
    (Path(output_dir) / PLOT_TSV).write_text(report.to_tsv())
    fig = constants_figure(report)
    json_path = Path(output_dir) / PLOT_JSON
    json_path.write_text(pio.to_json(fig, pretty=True))
    plot(fig, filename=str(Path(output_dir) / PLOT_HTML), auto_open=False)
    logging.info(f"Constants figure written to {json_path}.")
