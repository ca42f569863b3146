"""
Knowledge Map tab: the agent network coloured by epistemic state for one
prop, with its knowledge neighborhoods.
"""
from typing import Tuple

import gradio as gr
import networkx as nx
import pandas as pd
import plotly.graph_objects as go

from core.epinet import Epinet
from core.errors import EpinetError
from core.regimes import find_neighborhoods
from core.scenario import Names, parse_scenario, run_scenario
from core.models import sorted_ids
from utils.export import STATE_COLORS

from .dashboard import EXAMPLE

NEIGHBORHOOD_KINDS = ["distributed", "mutual", "common", "covert"]


def _empty_figure(message: str) -> go.Figure:
    fig = go.Figure()
    fig.add_annotation(
        text=message,
        xref="paper", yref="paper",
        x=0.5, y=0.5, showarrow=False,
        font=dict(size=16, color="gray")
    )
    fig.update_layout(title="Knowledge Map", height=500)
    return fig


def knowledge_figure(net: Epinet, prop_id: str, names: Names) -> go.Figure:
    """Agents on a circle, trust edges as lines, nodes coloured by state."""
    graph = nx.DiGraph()
    graph.add_nodes_from(sorted_ids(net.agents))
    graph.add_edges_from((s, t) for (s, t, _kind) in net.trust)
    layout = nx.circular_layout(graph)

    edge_x, edge_y = [], []
    for source, target in graph.edges():
        edge_x += [layout[source][0], layout[target][0], None]
        edge_y += [layout[source][1], layout[target][1], None]

    nodes = sorted_ids(net.agents)
    states = [sorted(net.epistemic_state(a, prop_id)) for a in nodes]
    colors = [
        next((STATE_COLORS[s] for s in labels if s in STATE_COLORS), "white")
        for labels in states
    ]
    fig = go.Figure(
        data=[
            go.Scatter(
                x=edge_x, y=edge_y, mode="lines",
                line=dict(width=1, color="#888"), hoverinfo="none",
            ),
            go.Scatter(
                x=[layout[a][0] for a in nodes],
                y=[layout[a][1] for a in nodes],
                mode="markers+text",
                text=[names.name(a) for a in nodes],
                textposition="top center",
                hovertext=[", ".join(labels) for labels in states],
                marker=dict(size=24, color=colors, line=dict(width=1, color="black")),
            ),
        ]
    )
    fig.update_layout(
        title=f"Knowledge of {names.name(prop_id)}",
        showlegend=False,
        height=500,
        xaxis=dict(visible=False),
        yaxis=dict(visible=False),
    )
    return fig


def neighborhoods_table(net: Epinet, prop_id: str, names: Names) -> pd.DataFrame:
    rows = [
        {
            "Kind": kind,
            "Members": ", ".join(names.names(hood.members)),
            "Level": "" if hood.level is None else str(hood.level),
        }
        for kind in NEIGHBORHOOD_KINDS
        for hood in find_neighborhoods(net, prop_id, kind)
    ]
    return pd.DataFrame(rows, columns=["Kind", "Members", "Level"])


def build_knowledge_map(text: str, prop_name: str) -> Tuple[go.Figure, pd.DataFrame]:
    """Run the scenario and map knowledge of one prop."""
    empty = pd.DataFrame(columns=["Kind", "Members", "Level"])
    try:
        outcome = run_scenario(parse_scenario(text))
        prop_id = outcome.names.prop(prop_name.strip())
        outcome.net.require_prop(prop_id)
        return (
            knowledge_figure(outcome.net, prop_id, outcome.names),
            neighborhoods_table(outcome.net, prop_id, outcome.names),
        )
    except EpinetError as exc:
        return _empty_figure(f"{type(exc).__name__}: {exc}"), empty


def create_analytics():
    """Create the knowledge map interface."""
    with gr.Column():
        gr.Markdown("## Knowledge Map")

        with gr.Row():
            scenario_box = gr.Textbox(label="Scenario", value=EXAMPLE, lines=12)
            with gr.Column():
                prop_box = gr.Textbox(label="Prop", value="p")
                map_btn = gr.Button("Draw Map", variant="primary")

        knowledge_plot = gr.Plot(label="Epistemic states")

        gr.Markdown("### Neighborhoods")
        hood_table = gr.Dataframe(
            label="Maximal neighborhoods",
            headers=["Kind", "Members", "Level"],
            interactive=False,
        )

        map_btn.click(
            fn=build_knowledge_map,
            inputs=[scenario_box, prop_box],
            outputs=[knowledge_plot, hood_table],
        )
