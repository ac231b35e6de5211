// Copyright 2026 The virtmic Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Generated by tests/oracles/golden.py. Row-major.
#pragma once

namespace golden {

inline constexpr double kCorrAuto[] = {0.590471585870228, 0.46474569156698564, 0.22584807323128167, 0.1015621638454343, 0.1361394486074469, -0.017483512827462206, 0.46474569156698564, 0.603158410991508, 0.4799987501915599, -0.037865565092196095, 0.1190854779373738, 0.15718532588057835, 0.22584807323128167, 0.4799987501915599, 0.618139975269323, -0.0711505427883236, -0.02407325117965714, 0.13874729557250368, 0.1015621638454343, -0.037865565092196095, -0.0711505427883236, 0.676977099192838, 0.44801182568567505, -0.03141087190468537, 0.1361394486074469, 0.1190854779373738, -0.02407325117965714, 0.44801182568567505, 0.6854117240578836, 0.46485430501037034, -0.017483512827462206, 0.15718532588057835, 0.13874729557250368, -0.03141087190468537, 0.46485430501037034, 0.7108443303546582};
inline constexpr double kCorrCross[] = {-0.03633299521284614, -0.02324367660447425, -0.04612506034797632, 0.04970987047990652, -0.04949127512504567, 0.10486205598135262, -0.026334984509997505, 0.03125963116035533, -0.014466542935538396, 0.034805694522103546, -0.004340526976710297, 0.0245526327436577};
inline constexpr double kOfTime[] = {0.004013640436322731, -0.14207655906628042, 0.050404450524008215, -0.2230203026075215, 0.2621975136348287, -0.16551426415894907, -0.11952656417032301, -0.5836008043200809, 0.8460058612800054, -0.9075270091599774, 1.4841897912639348, -1.0137369252499682};
inline constexpr double kApplyFirst[] = {-0.1575169577520929, -0.18614030507255386};
inline constexpr double kApplyLast[] = {-0.015304366801097452, 0.404632171976119};
inline constexpr double kGram[] = {2.064625793637482, 1.8391403293487767, 1.4989860541034363, 1.8391403293487767, 1.702462536467743, 1.4782761210357278, 1.4989860541034363, 1.4782761210357278, 1.4209201220161654};
inline constexpr double kCrossTraces[] = {2.2920201571582908, 2.0809709456016643, 1.7347470693840465};
inline constexpr double kClosedFormZ[] = {-0.9486918794197615, 3.2914831763282866, -1.202670009104175};
inline constexpr double kObjectiveProbeZ[] = {-0.2, 1.0, 6.0};
inline constexpr double kObjectiveProbe[] = {55.34678203579369};
inline constexpr double kGradientProbe[] = {12.256222676167216, 16.246640502421382, 35.93850514585597};
inline constexpr double kClosedFormNormErrDb[] = {-15.454717329591539};
inline constexpr double kLepsBins[] = {-22.079789408160938, -18.207174736001125, -16.96925430305687, -14.785905740236418, -14.082378571606744, -14.119013545827814, -14.25822261366645, -14.278080908759033, -14.186197879280087};
inline constexpr double kLepsBroadband[] = {-16.63154323713773};

}  // namespace golden
