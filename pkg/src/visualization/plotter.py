from typing import List, Optional, Sequence
import logging

import plotly.graph_objects as go
from plotly.subplots import make_subplots

from src.sim.trace import Trace

logger = logging.getLogger(__name__)

DEFAULT_SIGNALS = ('clk', 'reset', 'car_enter', 'ctrl.state', 'Z', 'out_1', 'slotallot', 'cout')


class WaveformPlotter:
    def __init__(self) -> None:
        self.colors = {
            'primary': '#FF6B6B',
            'secondary': '#4ECDC4',
            'accent': '#45B7D1',
            'background': '#1A1A1A',
            'text': '#FFFFFF'
        }

        self.layout_defaults = {
            'template': 'plotly_dark',
            'paper_bgcolor': self.colors['background'],
            'plot_bgcolor': self.colors['background'],
            'font': {'color': self.colors['text']}
        }

    def pick_signals(self, trace: Trace, signals: Optional[Sequence[str]] = None) -> List[str]:
        """Requested signals that exist in the trace, or the default set"""
        wanted = list(signals) if signals else list(DEFAULT_SIGNALS)
        present = [name for name in wanted if trace.has(name)]
        if not present:
            present = [signal.name for signal in trace.signals[:8]]
        return present

    def create_waveform(self,
                        trace: Trace,
                        signals: Optional[Sequence[str]] = None,
                        title: str = 'Parking system waveform') -> go.Figure:
        """One step-shaped row per signal over the simulated cycles, like a logic analyser"""
        names = self.pick_signals(trace, signals)
        df = trace.to_frame(names)

        fig = make_subplots(
            rows=len(names), cols=1,
            shared_xaxes=True,
            vertical_spacing=0.02,
            subplot_titles=names
        )
        palette = [self.colors['primary'], self.colors['secondary'], self.colors['accent']]
        for row, name in enumerate(names, start=1):
            width = trace.signal(name).width
            fig.add_trace(
                go.Scatter(
                    x=df.index,
                    y=df[name].astype(float),
                    name=name,
                    mode='lines',
                    line={'color': palette[(row - 1) % len(palette)], 'shape': 'hv'},
                ),
                row=row, col=1
            )
            # one-bit rows get a fixed range so they read as logic levels
            if width == 1:
                fig.update_yaxes(range=[-0.2, 1.2], tickvals=[0, 1], row=row, col=1)

        fig.update_xaxes(title_text='cycle', row=len(names), col=1)
        fig.update_layout(
            title=title,
            showlegend=False,
            height=max(300, 90 * len(names)),
            **self.layout_defaults
        )
        return fig

    def save_plot(self, fig: go.Figure, path: str) -> None:
        """Save plot as interactive HTML, or as a static image for any other suffix"""
        if path.lower().endswith('.html'):
            fig.write_html(path)
        else:
            fig.write_image(path)
        logger.info(f'waveform written to {path}')
