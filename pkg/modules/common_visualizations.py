"""
Common Visualizations Module

모든 실험에서 공유하는 plotly 차트 함수.
각 함수는 go.Figure 를 반환하며, 저장은 runner 가 담당합니다 (--figures).
"""

import numpy as np
import plotly.graph_objects as go

# ============================================================
# Common Styling
# ============================================================
CHART_THEME = {
    "template": "plotly_white",
    "height": 500,
    "font": {"family": "AppleGothic, Malgun Gothic, sans-serif", "size": 12},  # 한글 폰트 우선
    "title_font": {"size": 18, "color": "#2c3e50"},
    "hovermode": "closest"
}

COLORS = {
    "solution": "#3185FC",
    "reference": "#2D3047",
    "bound": "#E84855",
    "fit": "#1B998B",
    "nonlocal": "#9b59b6",
    "local": "#F9C22E",
}

# 차수별 선 색상
ORDER_COLORS = [
    "#E84855", "#3185FC", "#2ECC71", "#F9C22E",
    "#9B59B6", "#FF6B35", "#1B998B", "#D81E5B",
]


# ============================================================
# Chart 1: Field (1D 곡선 / 2D 히트맵)
# ============================================================
def create_field_chart(u, title, mask_outside=False):
    """
    격자 위의 Field 를 그림. 1D 는 선 그래프, 2D 는 히트맵.
    mask_outside=True 이면 Ω 밖의 값은 비워 둠.
    """
    grid = u.grid
    values = np.where(grid.omega_mask, u.values, np.nan) if mask_outside else u.values
    fig = go.Figure()

    if grid.n == 1:
        fig.add_trace(go.Scatter(
            x=grid.axis,
            y=values,
            name='u(x)',
            line=dict(color=COLORS['solution'], width=2),
            hovertemplate='<b>x:</b> %{x:.4f}<br><b>u:</b> %{y:.6g}<extra></extra>'
        ))
        fig.update_layout(title=title, xaxis_title='x', yaxis_title='u', **CHART_THEME)
    else:
        fig.add_trace(go.Heatmap(
            x=grid.axis,
            y=grid.axis,
            z=values.T,
            colorscale='Viridis',
            colorbar=dict(title='u'),
            hovertemplate='<b>x:</b> %{x:.3f}<br><b>y:</b> %{y:.3f}<br><b>u:</b> %{z:.6g}<extra></extra>'
        ))
        fig.update_layout(title=title, xaxis_title='x', yaxis_title='y', **CHART_THEME)
        fig.update_yaxes(scaleanchor='x', scaleratio=1)

    return fig


# ============================================================
# Chart 2: Symbol (A(ξ) 와 상하한)
# ============================================================
def create_symbol_chart(frame, lower, upper, title):
    """
    |ξ| 에 대한 A(ξ) 로그-로그 산점도와 λ·min(|ξ|^{2s},|ξ|²), Λ·max(...) 곡선.
    frame 열: radius, symbol, low_envelope, high_envelope
    """
    frame = frame[frame['radius'] > 0].sort_values('radius')
    fig = go.Figure()

    fig.add_trace(go.Scatter(
        x=frame['radius'],
        y=frame['symbol'],
        mode='markers',
        name='A(ξ)',
        marker=dict(color=COLORS['solution'], size=4, opacity=0.6),
    ))
    fig.add_trace(go.Scatter(
        x=frame['radius'],
        y=lower * frame['low_envelope'],
        name=f'λ = {lower:.4g}',
        line=dict(color=COLORS['fit'], dash='dash'),
    ))
    fig.add_trace(go.Scatter(
        x=frame['radius'],
        y=upper * frame['high_envelope'],
        name=f'Λ = {upper:.4g}',
        line=dict(color=COLORS['bound'], dash='dash'),
    ))

    fig.update_layout(
        title=title,
        xaxis=dict(title='|ξ|', type='log'),
        yaxis=dict(title='A(ξ)', type='log'),
        **CHART_THEME
    )

    return fig


# ============================================================
# Chart 3: Operator comparison (quadrature vs FFT)
# ============================================================
def create_operator_comparison_chart(frame, title):
    """
    1D 구적 적용값과 FFT 기준값 비교. frame 열: x, quadrature, fft
    """
    fig = go.Figure()

    fig.add_trace(go.Scatter(
        x=frame['x'],
        y=frame['fft'],
        name='FFT 기준값',
        line=dict(color=COLORS['reference'], width=3),
    ))
    fig.add_trace(go.Scatter(
        x=frame['x'],
        y=frame['quadrature'],
        name='구적 (apply_L)',
        mode='markers',
        marker=dict(color=COLORS['nonlocal'], size=5),
    ))

    fig.update_layout(title=title, xaxis_title='x', yaxis_title='Lu(x)', **CHART_THEME)

    return fig


# ============================================================
# Chart 4: Contraction ratios (Picard / proximal)
# ============================================================
def create_contraction_chart(ratios, title, target=0.9):
    """
    반복 단계별 축소 비율과 목표선.
    """
    fig = go.Figure()

    fig.add_trace(go.Scatter(
        x=list(range(1, len(ratios) + 1)),
        y=ratios,
        name='‖u_k − u_{k−1}‖ 비율',
        mode='lines+markers',
        line=dict(color=COLORS['solution'], width=2),
    ))
    fig.add_hline(
        y=target,
        line_dash='dash',
        line_color='red',
        annotation_text=f'목표 {target}',
        annotation_position='bottom right',
    )

    fig.update_layout(title=title, xaxis_title='반복 단계', yaxis_title='축소 비율', **CHART_THEME)

    return fig


# ============================================================
# Chart 5: Maximum principle trials
# ============================================================
def create_max_principle_chart(trials, title):
    """
    시행별 min u 막대 그래프 (통과 = 초록, 실패 = 빨강).
    """
    colors = [COLORS['fit'] if passed else COLORS['bound'] for passed in trials['passed']]
    fig = go.Figure()

    fig.add_trace(go.Bar(
        x=trials['trial'],
        y=trials['min_u'],
        marker_color=colors,
        name='min u',
        hovertemplate='<b>시행:</b> %{x}<br><b>min u:</b> %{y:.3e}<extra></extra>'
    ))
    fig.add_hline(y=0.0, line_color='black', line_width=1)

    fig.update_layout(title=title, xaxis_title='시행', yaxis_title='min u over Ω', **CHART_THEME)

    return fig


# ============================================================
# Chart 6: v_λ sweep
# ============================================================
def create_vlambda_chart(frame, title):
    """
    λ 에 따른 ‖v_λ‖∞ 와 2/λ 상한 (로그-로그).
    """
    fig = go.Figure()

    fig.add_trace(go.Scatter(
        x=frame['lambda'],
        y=frame['v_sup'],
        name='‖v_λ‖∞',
        mode='lines+markers',
        line=dict(color=COLORS['solution'], width=2),
    ))
    fig.add_trace(go.Scatter(
        x=frame['lambda'],
        y=frame['bound'],
        name='2/λ',
        line=dict(color=COLORS['bound'], dash='dash'),
    ))

    fig.update_layout(
        title=title,
        xaxis=dict(title='λ', type='log'),
        yaxis=dict(title='sup norm', type='log'),
        **CHART_THEME
    )

    return fig


# ============================================================
# Chart 7: Hölder seminorms across scales
# ============================================================
def create_seminorm_chart(frame, title):
    """
    차수(order)별 스케일-세미노름 로그-로그 곡선. frame 열: scale, order, seminorm
    """
    fig = go.Figure()

    for i, (order, part) in enumerate(frame.groupby('order')):
        fig.add_trace(go.Scatter(
            x=part['scale'],
            y=part['seminorm'],
            name=f'β = {order:g}',
            mode='lines+markers',
            line=dict(color=ORDER_COLORS[i % len(ORDER_COLORS)], width=2),
        ))

    fig.update_layout(
        title=title,
        xaxis=dict(title='scale', type='log'),
        yaxis=dict(title='seminorm', type='log'),
        **CHART_THEME
    )

    return fig


# ============================================================
# Chart 8: Boundary exponent fits
# ============================================================
def create_boundary_chart(frame, title):
    """
    경계 거리 d 에 대한 u 의 로그-로그 산점도, 실행(run)별로 색 구분.
    frame 열: run, distance, value
    """
    fig = go.Figure()

    for i, (run, part) in enumerate(frame.groupby('run', sort=False)):
        fig.add_trace(go.Scatter(
            x=part['distance'],
            y=part['value'],
            name=str(run),
            mode='markers',
            marker=dict(color=ORDER_COLORS[i % len(ORDER_COLORS)], size=4),
        ))

    fig.update_layout(
        title=title,
        xaxis=dict(title='d(x)', type='log'),
        yaxis=dict(title='u(x)', type='log'),
        **CHART_THEME
    )

    return fig
